/**
 * @file sim.hpp
 * @brief Closed-loop reduced-model experiments.
 *
 * Every MPC period the controller receives the plant state, the reference
 * window and the payload estimate held over the horizon; its first input is
 * applied zero-order held while the plant (same centroidal model) is
 * integrated at the finer plant period. Payload attachment points move with
 * the simulated CoM.
 */
#pragma once

#include "pmpc/baseline.hpp"
#include "pmpc/gait.hpp"
#include "pmpc/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pmpc {

enum class ControllerKind { Parametrized, Baseline, ParametrizedNoTd };

[[nodiscard]] inline const char* to_string(ControllerKind k) {
  switch (k) {
  case ControllerKind::Parametrized:
    return "param";
  case ControllerKind::Baseline:
    return "baseline";
  case ControllerKind::ParametrizedNoTd:
    return "param-no-td";
  }
  return "?";
}

[[nodiscard]] inline ControllerKind parse_controller(std::string_view s) {
  if (s == "param") {
    return ControllerKind::Parametrized;
  }
  if (s == "baseline") {
    return ControllerKind::Baseline;
  }
  if (s == "param-no-td") {
    return ControllerKind::ParametrizedNoTd;
  }
  throw ConfigurationError("unknown controller '" + std::string(s) + "' (param | baseline | param-no-td)");
}

struct PayloadSpec {
  double mass = 1.5;                                   ///< [kg]
  Vector3 left_offset = Vector3(0.25, 0.1, -0.1325);   ///< from the CoM [m]
  Vector3 right_offset = Vector3(0.25, -0.1, -0.1325); ///< from the CoM [m]
  double onset = 0.0;                                  ///< [s]

  [[nodiscard]] PayloadDisturbance relative_at(double t) const {
    return payload_from_mass(t + 1e-12 >= onset ? mass : 0.0, left_offset, right_offset);
  }
};

struct Scenario {
  MpcConfig mpc{};
  Weights weights{};
  GaitParameters gait{};
  PayloadSpec payload{};
  ControllerKind controller = ControllerKind::Parametrized;
  double plant_dt = 0.01; ///< [s]
  double duration = 10.0; ///< [s]
  std::uint64_t seed = 0;
  double initial_com_jitter = 0.0; ///< half-width of a uniform CoM offset [m]
  bool warm_start = true;

  [[nodiscard]] int substeps() const { return static_cast<int>(std::lround(mpc.dt / plant_dt)); }
  [[nodiscard]] int mpc_ticks() const { return static_cast<int>(std::lround(duration / mpc.dt)); }

  void validate() const {
    mpc.validate();
    weights.validate();
    gait.validate(mpc.dt);
    if (!(plant_dt > 0.0) || std::abs(mpc.dt / plant_dt - substeps()) > 1e-9 * substeps()) {
      throw ConfigurationError("scenario: plant_dt must divide the MPC period");
    }
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
      throw ConfigurationError("scenario: duration must be >= 0");
    }
    if (!(payload.mass >= 0.0) || !std::isfinite(payload.mass)) {
      throw ConfigurationError("scenario: payload mass must be >= 0");
    }
    if (!payload.left_offset.allFinite() || !payload.right_offset.allFinite() || !std::isfinite(payload.onset)) {
      throw ConfigurationError("scenario: payload offsets and onset must be finite");
    }
    if (!(initial_com_jitter >= 0.0)) {
      throw ConfigurationError("scenario: initial_com_jitter must be >= 0");
    }
  }
};

/// One solve of any controller, first input in contact frames.
struct ControllerTick {
  std::vector<Wrench> wrenches;
  std::vector<Vector3> velocities;
  std::vector<Vector6> xi; ///< empty for the baseline
  SolverResult stats;
  CostBreakdown costs;
  Eigen::Index num_constraints = 0;
};

/// Receding-horizon controller with its own warm-start chain.
class Controller {
public:
  Controller(ControllerKind kind, Weights weights, MpcConfig config, bool warm_start = true)
      : kind_(kind), weights_(std::move(weights)), config_(std::move(config)), warm_start_(warm_start) {
    if (kind_ == ControllerKind::ParametrizedNoTd) {
      weights_.payload_task = false;
    }
  }

  [[nodiscard]] ControllerKind kind() const { return kind_; }

  /// Throws SolverFailure on an inner line-search breakdown.
  ControllerTick step(const CentroidalState& x, const HorizonReferences& refs, const PayloadDisturbance& d) {
    ControllerTick out;
    if (kind_ == ControllerKind::Baseline) {
      BaselineProblem p = build_constrained_mpc(x, refs, d, weights_, config_);
      std::optional<WarmStart> ws;
      if (warm_start_ && warm_ && previous_baseline_) {
        ws = WarmStart{warm_->decision,
                       shift_baseline_multipliers(*previous_baseline_, warm_->multipliers, p)};
      }
      BaselineOutput r = baseline_receding_step(p, ws);
      out.wrenches = std::move(r.wrenches);
      out.velocities = std::move(r.velocities);
      out.stats = std::move(r.stats);
      out.costs = r.costs;
      out.num_constraints = p.num_constraints();
      warm_ = std::move(r.next_warm_start);
      previous_baseline_ = std::move(p);
    } else {
      const HorizonProblem p = build_mpc_problem(x, refs, d, weights_, config_);
      RecedingHorizonOutput r = receding_horizon_step(p, warm_start_ ? warm_ : std::nullopt);
      out.wrenches = std::move(r.input.wrenches);
      out.velocities = std::move(r.input.velocities);
      out.xi = std::move(r.input.xi);
      out.stats = std::move(r.stats);
      out.costs = r.costs;
      out.num_constraints = p.num_constraints();
      warm_ = std::move(r.next_warm_start);
    }
    return out;
  }

private:
  ControllerKind kind_;
  Weights weights_;
  MpcConfig config_;
  bool warm_start_;
  std::optional<WarmStart> warm_;
  std::optional<BaselineProblem> previous_baseline_;
};

/// Logged at every plant tick.
struct SimSample {
  double time = 0.0;
  CentroidalState state;
  Vector3 com_reference = Vector3::Zero();
  std::vector<Vector3> footstep_references;
  std::vector<bool> active;
  std::vector<Wrench> wrenches; ///< applied, inertial frame
  std::vector<Vector6> xi;      ///< NaN for the baseline
  double payload_fz = 0.0;      ///< total vertical payload force [N]
  CostBreakdown costs;
  double solve_ms = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::Converged;
};

/// Logged at every MPC tick.
struct TickRecord {
  int tick = 0;
  double time = 0.0;
  double solve_ms = 0.0;
  int iterations = 0;
  int outer_iterations = 0;
  SolverStatus status = SolverStatus::Converged;
  double constraint_violation = 0.0;
  Eigen::Index num_constraints = 0;
};

/// A swing foot touching down.
struct Landing {
  int contact = 0;
  int tick = 0;
  Vector3 position = Vector3::Zero();
  Vector3 reference = Vector3::Zero();
  Vector3 error = Vector3::Zero(); ///< contact frame
  bool inside_bounds = true;
};

inline bool operator==(const SimSample& a, const SimSample& b) {
  auto same_wrenches = [](const std::vector<Wrench>& x, const std::vector<Wrench>& y) {
    if (x.size() != y.size()) {
      return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].stacked() != y[i].stacked()) {
        return false;
      }
    }
    return true;
  };
  auto same_xi = [](const std::vector<Vector6>& x, const std::vector<Vector6>& y) {
    if (x.size() != y.size()) {
      return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      // NaN-aware bitwise comparison
      if (std::memcmp(x[i].data(), y[i].data(), sizeof(double) * 6) != 0) {
        return false;
      }
    }
    return true;
  };
  return a.time == b.time && a.state == b.state && a.com_reference == b.com_reference &&
         a.footstep_references == b.footstep_references && a.active == b.active &&
         same_wrenches(a.wrenches, b.wrenches) && same_xi(a.xi, b.xi) && a.payload_fz == b.payload_fz &&
         a.costs.total() == b.costs.total() && a.iterations == b.iterations && a.status == b.status;
}

inline bool operator==(const TickRecord& a, const TickRecord& b) {
  // wall time is not reproducible
  return a.tick == b.tick && a.time == b.time && a.iterations == b.iterations &&
         a.outer_iterations == b.outer_iterations && a.status == b.status &&
         a.constraint_violation == b.constraint_violation && a.num_constraints == b.num_constraints;
}

inline bool operator==(const Landing& a, const Landing& b) {
  return a.contact == b.contact && a.tick == b.tick && a.position == b.position &&
         a.reference == b.reference && a.inside_bounds == b.inside_bounds;
}

struct SimLog {
  ControllerKind controller = ControllerKind::Parametrized;
  int num_contacts = 0;
  std::vector<SimSample> samples;
  std::vector<TickRecord> ticks;
  std::vector<Landing> landings;
  int unstable_wrenches = 0; ///< applied active wrenches failing is_contact_stable
  int flight_ticks = 0;      ///< MPC ticks without an active contact
  bool failed = false;
  std::string failure;

  bool operator==(const SimLog&) const = default;
};

/// Walking schedule with CoM references for a scenario.
[[nodiscard]] inline GaitSchedule scenario_schedule(const Scenario& s) {
  GaitSchedule g = generate_gait_schedule(s.gait, s.mpc);
  generate_nominal_com_reference(g, s.gait);
  return g;
}

/// Initial plant state: at the CoM reference (plus jitter), at rest, feet at their references.
[[nodiscard]] inline CentroidalState initial_state(const Scenario& s, const GaitSchedule& g) {
  CentroidalState x;
  x.com_position = g.com_reference(0);
  if (s.initial_com_jitter > 0.0) {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u(-s.initial_com_jitter, s.initial_com_jitter);
    for (int a = 0; a < 3; ++a) {
      x.com_position(a) += u(rng);
    }
  }
  for (int i = 0; i < g.num_contacts(); ++i) {
    x.contact_positions.push_back(g.footstep(i, 0));
  }
  return x;
}

namespace detail {

inline bool inside_footstep_bounds(const Vector3& e, const MpcConfig& c, double tol) {
  if (c.bound_mode == FootstepBoundMode::Box) {
    return ((e - c.footstep_lb).array() >= -tol).all() && ((c.footstep_ub - e).array() >= -tol).all();
  }
  return c.norm_bound * c.norm_bound - e.squaredNorm() >= -tol;
}

} // namespace detail

/// Tolerance used when checking landed feet against the footstep bounds [m].
inline constexpr double kLandingTolerance = 1e-6;

/**
 * @brief Run a closed loop. Solver failures end the run with
 * `failed = true`; the log holds everything up to that point.
 */
[[nodiscard]] inline SimLog run_closed_loop(const Scenario& scenario) {
  scenario.validate();
  const GaitSchedule schedule = scenario_schedule(scenario);
  const MpcConfig& cfg = scenario.mpc;
  const int nc = cfg.num_contacts();
  const int sub = scenario.substeps();

  SimLog log;
  log.controller = scenario.controller;
  log.num_contacts = nc;
  Controller controller(scenario.controller, scenario.weights, cfg, scenario.warm_start);
  CentroidalState x = initial_state(scenario, schedule);

  for (int n = 0; n < scenario.mpc_ticks(); ++n) {
    const double t0 = n * cfg.dt;
    const HorizonReferences refs = schedule.window(n, cfg.horizon);
    const ContactConfiguration contacts = refs.contacts_at(0, cfg.surfaces);

    bool any_active = false;
    for (int i = 0; i < nc; ++i) {
      any_active = any_active || contacts[i].active;
      if (n > 0 && contacts[i].active && !schedule.is_active(i, n - 1)) {
        Landing l;
        l.contact = i;
        l.tick = n;
        l.position = x.contact_positions[i];
        l.reference = schedule.footstep(i, n);
        l.error = refs.orientations[i].transpose() * (l.position - l.reference);
        l.inside_bounds = detail::inside_footstep_bounds(l.error, cfg, kLandingTolerance);
        log.landings.push_back(l);
      }
    }
    log.flight_ticks += any_active ? 0 : 1;

    const PayloadDisturbance estimate = attach_payload(scenario.payload.relative_at(t0), x.com_position);
    ControllerTick u;
    try {
      u = controller.step(x, refs, estimate);
    } catch (const SolverFailure& e) {
      log.failed = true;
      log.failure = "tick " + std::to_string(n) + ": " + e.what();
      TickRecord r;
      r.tick = n;
      r.time = t0;
      r.solve_ms = e.result().wall_time * 1e3;
      r.iterations = e.result().iterations;
      r.outer_iterations = e.result().outer_iterations;
      r.status = e.result().status;
      r.constraint_violation = e.result().constraint_violation;
      log.ticks.push_back(r);
      return log;
    }

    TickRecord rec;
    rec.tick = n;
    rec.time = t0;
    rec.solve_ms = u.stats.wall_time * 1e3;
    rec.iterations = u.stats.iterations;
    rec.outer_iterations = u.stats.outer_iterations;
    rec.status = u.stats.status;
    rec.constraint_violation = u.stats.constraint_violation;
    rec.num_constraints = u.num_constraints;
    log.ticks.push_back(rec);

    std::vector<Wrench> applied;
    for (int i = 0; i < nc; ++i) {
      if (contacts[i].active && !is_contact_stable(u.wrenches[i], cfg.surfaces[i]).satisfied) {
        ++log.unstable_wrenches;
      }
      applied.push_back(u.wrenches[i].rotated(contacts[i].orientation));
    }
    std::vector<Vector6> xi = u.xi;
    if (xi.empty()) {
      xi.assign(nc, Vector6::Constant(std::numeric_limits<double>::quiet_NaN()));
    }

    for (int j = 0; j < sub; ++j) {
      const double s = static_cast<double>(j) / sub;
      const double t = t0 + j * scenario.plant_dt;
      const PayloadDisturbance d = attach_payload(scenario.payload.relative_at(t), x.com_position);

      SimSample smp;
      smp.time = t;
      smp.state = x;
      smp.com_reference = (1.0 - s) * refs.com[0] + s * refs.com[1];
      for (int i = 0; i < nc; ++i) {
        smp.footstep_references.push_back((1.0 - s) * refs.footsteps[i][0] + s * refs.footsteps[i][1]);
        smp.active.push_back(contacts[i].active);
      }
      smp.wrenches = applied;
      smp.xi = xi;
      smp.payload_fz = d.vertical_force();
      smp.costs = u.costs;
      smp.solve_ms = rec.solve_ms;
      smp.iterations = rec.iterations;
      smp.status = rec.status;
      log.samples.push_back(std::move(smp));

      x = euler_step(x, applied, u.velocities, d, contacts, cfg.robot, scenario.plant_dt);
    }
  }
  return log;
}

/// Aggregates of a run.
struct SimSummary {
  int mpc_ticks = 0;
  bool failed = false;
  double max_horizontal_error = 0.0;  ///< [m], over plant ticks
  double mean_horizontal_error = 0.0; ///< [m]
  double mean_com_error = 0.0;        ///< 3D [m]
  double peak_height_deviation = 0.0; ///< max |z - c_z| [m]
  Vector3 final_com_error = Vector3::Zero();
  double mean_solve_ms = 0.0;
  double median_solve_ms = 0.0;
  double mean_iterations = 0.0;
  int max_iteration_ticks = 0; ///< ticks ending on the iteration budget
  CostBreakdown cost_totals;   ///< summed over MPC ticks
  bool landings_inside = true;
};

[[nodiscard]] inline double median(std::vector<double> v) {
  if (v.empty()) {
    return 0.0;
  }
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

[[nodiscard]] inline SimSummary summarize(const SimLog& log, double com_height) {
  SimSummary s;
  s.mpc_ticks = static_cast<int>(log.ticks.size());
  s.failed = log.failed;
  for (const auto& smp : log.samples) {
    const Vector3 e = smp.state.com_position - smp.com_reference;
    const double h = e.head<2>().norm();
    s.max_horizontal_error = std::max(s.max_horizontal_error, h);
    s.mean_horizontal_error += h;
    s.mean_com_error += e.norm();
    s.peak_height_deviation = std::max(s.peak_height_deviation, std::abs(smp.state.com_position.z() - com_height));
  }
  if (!log.samples.empty()) {
    s.mean_horizontal_error /= static_cast<double>(log.samples.size());
    s.mean_com_error /= static_cast<double>(log.samples.size());
    const auto& last = log.samples.back();
    s.final_com_error = last.state.com_position - last.com_reference;
  }
  std::vector<double> ms;
  for (const auto& r : log.ticks) {
    ms.push_back(r.solve_ms);
    s.mean_iterations += r.iterations;
    s.max_iteration_ticks += r.status == SolverStatus::MaxIterations ? 1 : 0;
  }
  if (!ms.empty()) {
    double total = 0.0;
    for (double v : ms) {
      total += v;
    }
    s.mean_solve_ms = total / static_cast<double>(ms.size());
    s.mean_iterations /= static_cast<double>(ms.size());
  }
  s.median_solve_ms = median(ms);
  const int sub = log.ticks.empty() ? 1 : std::max<int>(1, static_cast<int>(log.samples.size() / log.ticks.size()));
  for (std::size_t k = 0; k < log.samples.size(); k += static_cast<std::size_t>(sub)) {
    const auto& c = log.samples[k].costs;
    s.cost_totals.centroidal += c.centroidal;
    s.cost_totals.footstep += c.footstep;
    s.cost_totals.payload += c.payload;
    s.cost_totals.parameter += c.parameter;
    s.cost_totals.velocity += c.velocity;
  }
  for (const auto& l : log.landings) {
    s.landings_inside = s.landings_inside && l.inside_bounds;
  }
  return s;
}

/// CSV header of write_csv() for `contacts` feet.
[[nodiscard]] inline std::vector<std::string> csv_header(int contacts) {
  std::vector<std::string> h{"t"};
  auto xyz = [&h](const std::string& prefix) {
    for (const char* a : {"x", "y", "z"}) {
      h.push_back(prefix + "_" + a);
    }
  };
  xyz("com");
  xyz("ref_com");
  xyz("hl");
  xyz("hw");
  for (int i = 0; i < contacts; ++i) {
    const std::string id = std::to_string(i);
    xyz("c" + id);
    xyz("c" + id + "_ref");
    h.push_back("c" + id + "_active");
    xyz("f" + id);
    xyz("m" + id);
    for (int j = 1; j <= 6; ++j) {
      h.push_back("xi_" + id + "_" + std::to_string(j));
    }
  }
  for (const char* c : {"d_fz_total", "cost_Th", "cost_Tpc", "cost_Td", "cost_Txi", "solve_ms", "iterations", "status"}) {
    h.push_back(c);
  }
  return h;
}

inline void write_csv(const SimLog& log, std::ostream& os) {
  const auto header = csv_header(log.num_contacts);
  for (std::size_t i = 0; i < header.size(); ++i) {
    os << (i ? "," : "") << header[i];
  }
  os << '\n';
  std::ostringstream line;
  line << std::setprecision(12);
  auto put = [&line](double v) { line << ',' << v; };
  auto put3 = [&put](const auto& v) {
    put(v(0));
    put(v(1));
    put(v(2));
  };
  for (const auto& s : log.samples) {
    line.str("");
    line << s.time;
    put3(s.state.com_position);
    put3(s.com_reference);
    put3(s.state.momentum.head<3>());
    put3(s.state.momentum.tail<3>());
    for (int i = 0; i < log.num_contacts; ++i) {
      put3(s.state.contact_positions[i]);
      put3(s.footstep_references[i]);
      line << ',' << (s.active[i] ? 1 : 0);
      put3(s.wrenches[i].force);
      put3(s.wrenches[i].moment);
      for (int j = 0; j < 6; ++j) {
        put(s.xi[i](j));
      }
    }
    put(s.payload_fz);
    put(s.costs.centroidal);
    put(s.costs.footstep);
    put(s.costs.payload);
    put(s.costs.parameter);
    put(s.solve_ms);
    line << ',' << s.iterations << ',' << to_string(s.status) << '\n';
    os << line.str();
  }
}

} // namespace pmpc
