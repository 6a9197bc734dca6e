/**
 * @file config.hpp
 * @brief JSON run configuration. Every object is read strictly: unknown keys
 * and ill-typed values raise ConfigurationError naming the dotted key path.
 *
 * Top-level keys (all optional, defaults are the library defaults):
 *   output_dir, controller, plant_dt, duration, seed, initial_com_jitter,
 *   warm_start, robot, mpc, surfaces, weights, solver, gait, payload,
 *   benchmark, verify
 * Matrices are given either as a diagonal (list of n numbers) or as a
 * nested n x n list.
 */
#pragma once

#include "pmpc/benchmark.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace pmpc {

struct BenchmarkSettings {
  int runs = 1;
  TimingMode mode = TimingMode::SharedTrace;
};

struct VerifySettings {
  long samples = 1000000;
  int random_surfaces = 10; ///< surfaces drawn besides the configured ones
  double xi_min = -10.0;
  double xi_max = 10.0;
  long coverage_points = 20000;
  double coverage_margin = 0.05;
  double max_normal_force = 100.0; ///< [N]
};

struct RunConfig {
  Scenario scenario;
  std::string output_dir = "out";
  BenchmarkSettings benchmark;
  VerifySettings verify;

  void validate() const {
    scenario.validate();
    if (benchmark.runs < 1) {
      throw ConfigurationError("benchmark.runs: must be >= 1");
    }
    if (verify.samples < 1 || verify.coverage_points < 1 || verify.random_surfaces < 0) {
      throw ConfigurationError("verify: samples and coverage_points must be >= 1, random_surfaces >= 0");
    }
    if (!(verify.xi_min <= verify.xi_max)) {
      throw ConfigurationError("verify.xi_min: must be <= verify.xi_max");
    }
  }
};

namespace detail {

using nlohmann::json;

class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      fail("", "expected an object");
    }
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      keys_.insert(it.key());
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigurationError(join(key) + ": " + what);
  }
  [[nodiscard]] std::string join(const std::string& key) const {
    if (key.empty()) {
      return path_.empty() ? "<root>" : path_;
    }
    return path_.empty() ? key : path_ + "." + key;
  }

  [[nodiscard]] const json* find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) {
      return nullptr;
    }
    keys_.erase(key);
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) {
        fail(key, "expected a number");
      }
      out = v->get<double>();
    }
  }
  template <typename I>
  void integer(const std::string& key, I& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() && !v->is_number_unsigned()) {
        fail(key, "expected an integer");
      }
      out = v->get<I>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) {
        fail(key, "expected true or false");
      }
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) {
        fail(key, "expected a string");
      }
      out = v->get<std::string>();
    }
  }
  template <int N>
  void vector(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != static_cast<std::size_t>(N)) {
        fail(key, "expected a list of " + std::to_string(N) + " numbers");
      }
      for (int i = 0; i < N; ++i) {
        if (!(*v)[i].is_number()) {
          fail(key, "expected a list of " + std::to_string(N) + " numbers");
        }
        out(i) = (*v)[i].get<double>();
      }
    }
  }
  template <int N>
  void matrix(const std::string& key, Eigen::Matrix<double, N, N>& out) {
    const json* v = find(key);
    if (!v) {
      return;
    }
    const std::string shape = "expected " + std::to_string(N) + " diagonal entries or an " + std::to_string(N) +
                              "x" + std::to_string(N) + " nested list";
    if (!v->is_array() || v->size() != static_cast<std::size_t>(N)) {
      fail(key, shape);
    }
    if ((*v)[0].is_number()) {
      out.setZero();
      for (int i = 0; i < N; ++i) {
        if (!(*v)[i].is_number()) {
          fail(key, shape);
        }
        out(i, i) = (*v)[i].get<double>();
      }
      return;
    }
    for (int r = 0; r < N; ++r) {
      const json& row = (*v)[r];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(N)) {
        fail(key, shape);
      }
      for (int c = 0; c < N; ++c) {
        if (!row[c].is_number()) {
          fail(key, shape);
        }
        out(r, c) = row[c].get<double>();
      }
    }
  }

  /// Rejects whatever was not consumed.
  void finish() const {
    if (!keys_.empty()) {
      fail(*keys_.begin(), "unknown key");
    }
  }

  [[nodiscard]] const std::string& path() const { return path_; }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> keys_;
};

template <typename F>
void section(Reader& parent, const std::string& key, F&& body) {
  if (const json* v = parent.find(key)) {
    Reader r(*v, parent.join(key));
    body(r);
    r.finish();
  }
}

/// Runs `check`, re-raising its message under `path`.
template <typename F>
void checked(const std::string& path, F&& check) {
  try {
    check();
  } catch (const ConfigurationError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) {
      throw;
    }
    throw ConfigurationError(path + ": " + what);
  }
}

inline void read_surface(Reader& r, ContactSurface& s) {
  r.number("x_min", s.x_min);
  r.number("x_max", s.x_max);
  r.number("y_min", s.y_min);
  r.number("y_max", s.y_max);
  r.number("mu_c", s.mu_c);
  r.number("mu_z", s.mu_z);
  r.number("fz_min", s.fz_min);
}

} // namespace detail

/// Parse and validate a configuration document.
[[nodiscard]] inline RunConfig parse_run_config(const nlohmann::json& doc) {
  using detail::Reader;
  using detail::section;
  RunConfig cfg;
  Scenario& sc = cfg.scenario;
  Reader root(doc, "");

  root.string("output_dir", cfg.output_dir);
  std::string controller = to_string(sc.controller);
  root.string("controller", controller);
  detail::checked("controller", [&] { sc.controller = parse_controller(controller); });
  root.number("plant_dt", sc.plant_dt);
  root.number("duration", sc.duration);
  root.integer("seed", sc.seed);
  root.number("initial_com_jitter", sc.initial_com_jitter);
  root.boolean("warm_start", sc.warm_start);

  section(root, "robot", [&](Reader& r) {
    r.number("mass", sc.mpc.robot.mass);
    double g = sc.mpc.robot.gravity_vector(2);
    r.number("gravity", g);
    sc.mpc.robot.gravity_vector(2) = g;
    if (!(sc.mpc.robot.mass > 0.0)) {
      r.fail("mass", "must be > 0");
    }
    detail::checked(r.path(), [&] { sc.mpc.robot.validate(); });
  });

  section(root, "mpc", [&](Reader& r) {
    r.integer("horizon", sc.mpc.horizon);
    r.number("dt", sc.mpc.dt);
    r.vector("footstep_lb", sc.mpc.footstep_lb);
    r.vector("footstep_ub", sc.mpc.footstep_ub);
    std::string mode = sc.mpc.bound_mode == FootstepBoundMode::Box ? "box" : "norm";
    r.string("bound_mode", mode);
    if (mode == "box") {
      sc.mpc.bound_mode = FootstepBoundMode::Box;
    } else if (mode == "norm") {
      sc.mpc.bound_mode = FootstepBoundMode::Norm;
    } else {
      r.fail("bound_mode", "expected \"box\" or \"norm\"");
    }
    r.number("norm_bound", sc.mpc.norm_bound);
  });

  if (const auto* list = root.find("surfaces")) {
    if (!list->is_array() || list->empty()) {
      root.fail("surfaces", "expected a non-empty list of surface objects");
    }
    std::vector<ContactSurface> surfaces;
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string path = "surfaces[" + std::to_string(i) + "]";
      Reader r((*list)[i], path);
      ContactSurface s;
      detail::read_surface(r, s);
      r.finish();
      detail::checked(path, [&] { s.validate(); });
      surfaces.push_back(s);
    }
    sc.mpc.surfaces = std::move(surfaces);
  }

  section(root, "weights", [&](Reader& r) {
    Weights& w = sc.weights;
    r.matrix("q_h", w.q_h);
    r.matrix("q_c", w.q_c);
    r.matrix("q_pc", w.q_pc);
    r.matrix("q_d", w.q_d);
    r.matrix("q_xi", w.q_xi);
    r.matrix("q_v", w.q_v);
    r.boolean("payload_task", w.payload_task);
    r.number("wrench_regularization", w.wrench_regularization);
    detail::checked(r.path(), [&] { w.validate(); });
  });

  section(root, "solver", [&](Reader& r) {
    SolverOptions& o = sc.mpc.solver;
    r.integer("max_iterations", o.max_iterations);
    r.number("kkt_tolerance", o.kkt_tolerance);
    r.number("constraint_tolerance", o.constraint_tolerance);
    r.number("penalty_init", o.penalty_init);
    r.number("penalty_growth", o.penalty_growth);
    r.number("penalty_max", o.penalty_max);
    r.integer("max_outer_iterations", o.max_outer_iterations);
    r.integer("max_inner_iterations", o.max_inner_iterations);
    r.integer("memory", o.memory);
    r.number("armijo", o.armijo);
    r.number("backtrack", o.backtrack);
    r.integer("max_line_search_steps", o.max_line_search_steps);
    r.number("initial_inner_tolerance", o.initial_inner_tolerance);
    r.boolean("use_curvature", o.use_curvature);
    detail::checked(r.path(), [&] { o.validate(); });
  });

  section(root, "gait", [&](Reader& r) {
    GaitParameters& g = sc.gait;
    r.number("step_length", g.step_length);
    r.number("step_width", g.step_width);
    r.number("single_support_duration", g.single_support_duration);
    r.number("double_support_duration", g.double_support_duration);
    r.integer("number_of_steps", g.number_of_steps);
    r.number("com_height", g.com_height);
  });

  section(root, "payload", [&](Reader& r) {
    r.number("mass", sc.payload.mass);
    r.vector("left_offset", sc.payload.left_offset);
    r.vector("right_offset", sc.payload.right_offset);
    r.number("onset", sc.payload.onset);
    if (!(sc.payload.mass >= 0.0)) {
      r.fail("mass", "must be >= 0");
    }
  });

  section(root, "benchmark", [&](Reader& r) {
    r.integer("runs", cfg.benchmark.runs);
    std::string mode = to_string(cfg.benchmark.mode);
    r.string("mode", mode);
    detail::checked(r.join("mode"), [&] { cfg.benchmark.mode = parse_timing_mode(mode); });
    if (cfg.benchmark.runs < 1) {
      r.fail("runs", "must be >= 1");
    }
  });

  section(root, "verify", [&](Reader& r) {
    r.integer("samples", cfg.verify.samples);
    r.integer("random_surfaces", cfg.verify.random_surfaces);
    r.number("xi_min", cfg.verify.xi_min);
    r.number("xi_max", cfg.verify.xi_max);
    r.integer("coverage_points", cfg.verify.coverage_points);
    r.number("coverage_margin", cfg.verify.coverage_margin);
    r.number("max_normal_force", cfg.verify.max_normal_force);
  });

  root.finish();
  cfg.validate();
  return cfg;
}

[[nodiscard]] inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

[[nodiscard]] inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigurationError("cannot read config file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

} // namespace pmpc
