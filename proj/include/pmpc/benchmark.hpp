/**
 * @file benchmark.hpp
 * @brief Solve-time comparison between the parametrized controller and the
 * constrained baseline.
 *
 * Two modes:
 *  - ClosedLoop: every controller runs its own closed loop on the scenario.
 *  - SharedTrace: the parametrized controller drives the plant; the baseline
 *    solves, with its own warm-start chain, exactly the states and
 *    references that loop visited. Both see identical problem inputs.
 */
#pragma once

#include "pmpc/sim.hpp"

#include <ostream>
#include <string_view>
#include <utility>
#include <string>
#include <vector>

namespace pmpc {

enum class TimingMode { ClosedLoop, SharedTrace };

[[nodiscard]] inline const char* to_string(TimingMode m) {
  return m == TimingMode::ClosedLoop ? "closed-loop" : "shared-trace";
}

[[nodiscard]] inline TimingMode parse_timing_mode(std::string_view s) {
  if (s == "closed-loop") {
    return TimingMode::ClosedLoop;
  }
  if (s == "shared-trace") {
    return TimingMode::SharedTrace;
  }
  throw ConfigurationError("unknown timing mode '" + std::string(s) + "' (closed-loop | shared-trace)");
}

struct TimingRecord {
  int run = 0;
  int tick = 0;
  ControllerKind controller = ControllerKind::Parametrized;
  double solve_ms = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::Converged;
};

struct ControllerTiming {
  ControllerKind controller = ControllerKind::Parametrized;
  int solves = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double mean_iterations = 0.0;
  int max_iteration_solves = 0;
  int failed_solves = 0;
  /// Inequalities attached to one horizon step with every contact active.
  Eigen::Index double_support_inequalities = 0;
};

struct TimingReport {
  TimingMode mode = TimingMode::SharedTrace;
  int runs = 0;
  std::vector<TimingRecord> records;
  ControllerTiming parametrized;
  ControllerTiming baseline;
};

/// Inequality rows of one all-contacts-active horizon step for each formulation.
[[nodiscard]] inline std::pair<Eigen::Index, Eigen::Index> double_support_inequalities(const MpcConfig& config) {
  BaselineProblem b;
  b.config = config;
  b.references.gait.assign(config.num_contacts(), std::vector<bool>(config.horizon + 1, true));
  HorizonProblem p;
  p.config = config;
  return {p.constraints_per_step(), b.constraints_at_step(0)};
}

namespace detail {

inline ControllerTiming aggregate(ControllerKind kind, const std::vector<TimingRecord>& records) {
  ControllerTiming t;
  t.controller = kind;
  std::vector<double> ms;
  for (const auto& r : records) {
    if (r.controller != kind) {
      continue;
    }
    ms.push_back(r.solve_ms);
    t.mean_iterations += r.iterations;
    t.max_iteration_solves += r.status == SolverStatus::MaxIterations ? 1 : 0;
    t.failed_solves += r.status == SolverStatus::LineSearchFailure ? 1 : 0;
  }
  t.solves = static_cast<int>(ms.size());
  if (!ms.empty()) {
    double total = 0.0;
    for (double v : ms) {
      total += v;
    }
    t.mean_ms = total / static_cast<double>(ms.size());
    t.mean_iterations /= static_cast<double>(ms.size());
  }
  t.median_ms = median(ms);
  return t;
}

inline void append_ticks(const SimLog& log, int run, std::vector<TimingRecord>& out) {
  for (const auto& r : log.ticks) {
    out.push_back({run, r.tick, log.controller, r.solve_ms, r.iterations, r.status});
  }
}

} // namespace detail

/**
 * @brief Time both controllers on `scenario` (its controller field is
 * ignored). Throws ConfigurationError when runs < 1.
 */
[[nodiscard]] inline TimingReport compare_timing(const Scenario& scenario, int runs,
                                                 TimingMode mode = TimingMode::SharedTrace) {
  if (runs < 1) {
    throw ConfigurationError("benchmark: runs must be >= 1");
  }
  scenario.validate();
  TimingReport report;
  report.mode = mode;
  report.runs = runs;

  for (int run = 0; run < runs; ++run) {
    Scenario param = scenario;
    param.controller = ControllerKind::Parametrized;
    const SimLog log = run_closed_loop(param);
    detail::append_ticks(log, run, report.records);

    if (mode == TimingMode::ClosedLoop) {
      Scenario base = scenario;
      base.controller = ControllerKind::Baseline;
      detail::append_ticks(run_closed_loop(base), run, report.records);
      continue;
    }

    const GaitSchedule schedule = scenario_schedule(scenario);
    const MpcConfig& cfg = scenario.mpc;
    const int sub = scenario.substeps();
    Controller baseline(ControllerKind::Baseline, scenario.weights, cfg, scenario.warm_start);
    for (const auto& tick : log.ticks) {
      const std::size_t sample = static_cast<std::size_t>(tick.tick) * static_cast<std::size_t>(sub);
      if (sample >= log.samples.size()) {
        break; // the driving loop failed at this tick
      }
      const CentroidalState& x = log.samples[sample].state;
      const HorizonReferences refs = schedule.window(tick.tick, cfg.horizon);
      const PayloadDisturbance d = attach_payload(scenario.payload.relative_at(tick.time), x.com_position);
      TimingRecord rec{run, tick.tick, ControllerKind::Baseline};
      try {
        const ControllerTick u = baseline.step(x, refs, d);
        rec.solve_ms = u.stats.wall_time * 1e3;
        rec.iterations = u.stats.iterations;
        rec.status = u.stats.status;
      } catch (const SolverFailure& e) {
        rec.solve_ms = e.result().wall_time * 1e3;
        rec.iterations = e.result().iterations;
        rec.status = e.result().status;
      }
      report.records.push_back(rec);
    }
  }

  const auto [param_rows, baseline_rows] = double_support_inequalities(scenario.mpc);
  report.parametrized = detail::aggregate(ControllerKind::Parametrized, report.records);
  report.parametrized.double_support_inequalities = param_rows;
  report.baseline = detail::aggregate(ControllerKind::Baseline, report.records);
  report.baseline.double_support_inequalities = baseline_rows;
  return report;
}

/// Columns: tick, controller, solve_ms, iterations, status; runs follow each other.
inline void write_timing_csv(const TimingReport& report, std::ostream& os) {
  os << "tick,controller,solve_ms,iterations,status\n";
  for (const auto& r : report.records) {
    os << r.tick << ',' << to_string(r.controller) << ',' << r.solve_ms << ',' << r.iterations << ','
       << to_string(r.status) << '\n';
  }
}

} // namespace pmpc
