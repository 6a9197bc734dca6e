// Command-line front end: simulate, benchmark, verify-param.
//
// Exit codes: 0 success, 1 property failure, 2 solver failure,
// 3 configuration error. PMPC_LOG_LEVEL (error | warn | info | debug)
// controls what is written to stderr; the default is info.

#include "pmpc/pmpc.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cstdio>
#include <optional>
#include <random>
#include <string>

namespace {

enum ExitCode { kOk = 0, kPropertyFailure = 1, kSolverFailure = 2, kConfigError = 3 };

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  const char* env = std::getenv("PMPC_LOG_LEVEL");
  if (!env) {
    return Level::Info;
  }
  const std::string v = env;
  if (v == "error") {
    return Level::Error;
  }
  if (v == "warn") {
    return Level::Warn;
  }
  if (v == "debug") {
    return Level::Debug;
  }
  return Level::Info;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= threshold) {
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
  }
}

struct Overrides {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> controller;
  std::optional<double> payload_mass;
  std::optional<int> steps;
};

void add_common(CLI::App& sub, Overrides& o) {
  sub.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub.add_option("--out-dir", o.out_dir, "output directory (overrides output_dir)");
  sub.add_option("--seed", o.seed, "random seed");
  sub.add_option("--controller", o.controller, "param | baseline | param-no-td");
  sub.add_option("--payload-mass", o.payload_mass, "payload mass [kg]");
  sub.add_option("--steps", o.steps, "number of walking steps");
}

pmpc::RunConfig load(const Overrides& o) {
  pmpc::RunConfig cfg = o.config.empty() ? pmpc::RunConfig{} : pmpc::load_run_config(o.config);
  if (o.out_dir) {
    cfg.output_dir = *o.out_dir;
  }
  if (o.seed) {
    cfg.scenario.seed = *o.seed;
  }
  if (o.controller) {
    cfg.scenario.controller = pmpc::parse_controller(*o.controller);
  }
  if (o.payload_mass) {
    if (!(*o.payload_mass >= 0.0)) {
      throw pmpc::ConfigurationError("--payload-mass: must be >= 0");
    }
    cfg.scenario.payload.mass = *o.payload_mass;
  }
  if (o.steps) {
    if (*o.steps < 0) {
      throw pmpc::ConfigurationError("--steps: must be >= 0");
    }
    cfg.scenario.gait.number_of_steps = *o.steps;
  }
  cfg.validate();
  return cfg;
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) {
    throw pmpc::ConfigurationError("cannot create output directory '" + dir + "': " + ec.message());
  }
  return p;
}

nlohmann::json vec_json(const pmpc::Vector3& v) { return {v.x(), v.y(), v.z()}; }

nlohmann::json summary_json(const pmpc::SimLog& log, const pmpc::SimSummary& s, const pmpc::Scenario& sc) {
  nlohmann::json j;
  j["controller"] = pmpc::to_string(log.controller);
  j["mpc_ticks"] = s.mpc_ticks;
  j["failed"] = log.failed;
  j["failure"] = log.failure;
  j["final_com_error"] = vec_json(s.final_com_error);
  j["final_com_error_norm"] = s.final_com_error.norm();
  j["max_horizontal_com_error"] = s.max_horizontal_error;
  j["mean_horizontal_com_error"] = s.mean_horizontal_error;
  j["mean_com_error"] = s.mean_com_error;
  j["peak_height_deviation"] = s.peak_height_deviation;
  j["mean_solve_ms"] = s.mean_solve_ms;
  j["median_solve_ms"] = s.median_solve_ms;
  j["mean_iterations"] = s.mean_iterations;
  j["max_iteration_ticks"] = s.max_iteration_ticks;
  j["cost_totals"] = {{"T_h", s.cost_totals.centroidal},
                      {"T_Pc", s.cost_totals.footstep},
                      {"T_d", s.cost_totals.payload},
                      {"T_xi", s.cost_totals.parameter},
                      {"velocity", s.cost_totals.velocity},
                      {"total", s.cost_totals.total()}};
  j["landings"] = log.landings.size();
  j["landings_inside_bounds"] = s.landings_inside;
  j["unstable_wrenches"] = log.unstable_wrenches;
  j["payload_mass"] = sc.payload.mass;
  j["seed"] = sc.seed;
  return j;
}

int cmd_simulate(const Overrides& o) {
  const pmpc::RunConfig cfg = load(o);
  const auto dir = prepare_dir(cfg.output_dir);
  log(Level::Info, std::string("simulate: controller ") + pmpc::to_string(cfg.scenario.controller) + ", " +
                       std::to_string(cfg.scenario.mpc_ticks()) + " MPC ticks");
  const pmpc::SimLog log_data = pmpc::run_closed_loop(cfg.scenario);
  {
    std::ofstream csv(dir / "log.csv");
    pmpc::write_csv(log_data, csv);
  }
  const pmpc::SimSummary s = pmpc::summarize(log_data, cfg.scenario.gait.com_height);
  const nlohmann::json j = summary_json(log_data, s, cfg.scenario);
  {
    std::ofstream out(dir / "summary.json");
    out << j.dump(2) << '\n';
  }
  std::cout << j.dump(2) << '\n';
  if (log_data.failed) {
    log(Level::Error, "solver failure: " + log_data.failure);
    return kSolverFailure;
  }
  log(Level::Info, "wrote " + (dir / "log.csv").string() + " and " + (dir / "summary.json").string());
  return kOk;
}

int cmd_benchmark(const Overrides& o, std::optional<int> runs) {
  pmpc::RunConfig cfg = load(o);
  if (runs) {
    cfg.benchmark.runs = *runs;
  }
  if (cfg.benchmark.runs < 1) {
    throw pmpc::ConfigurationError("benchmark.runs: must be >= 1");
  }
  const auto dir = prepare_dir(cfg.output_dir);
  log(Level::Info, "benchmark: " + std::to_string(cfg.benchmark.runs) + " run(s), mode " +
                       pmpc::to_string(cfg.benchmark.mode));
  const pmpc::TimingReport report = pmpc::compare_timing(cfg.scenario, cfg.benchmark.runs, cfg.benchmark.mode);
  {
    std::ofstream csv(dir / "timing.csv");
    pmpc::write_timing_csv(report, csv);
  }
  nlohmann::json j;
  j["mode"] = pmpc::to_string(report.mode);
  j["runs"] = report.runs;
  std::cout << "controller     solves  mean_ms  median_ms  mean_iter  ineq/DS-step\n";
  for (const auto* t : {&report.parametrized, &report.baseline}) {
    j["controllers"].push_back({{"controller", pmpc::to_string(t->controller)},
                                {"solves", t->solves},
                                {"mean_solve_ms", t->mean_ms},
                                {"median_solve_ms", t->median_ms},
                                {"mean_iterations", t->mean_iterations},
                                {"max_iteration_solves", t->max_iteration_solves},
                                {"failed_solves", t->failed_solves},
                                {"double_support_inequalities", t->double_support_inequalities}});
    std::printf("%-13s %7d %8.3f %10.3f %10.1f %13ld\n", pmpc::to_string(t->controller), t->solves, t->mean_ms,
                t->median_ms, t->mean_iterations, static_cast<long>(t->double_support_inequalities));
  }
  {
    std::ofstream out(dir / "benchmark.json");
    out << j.dump(2) << '\n';
  }
  if (report.parametrized.failed_solves > 0) {
    log(Level::Error, "parametrized controller failed during the benchmark");
    return kSolverFailure;
  }
  return kOk;
}

int cmd_verify(const Overrides& o, std::optional<long> samples) {
  pmpc::RunConfig cfg = load(o);
  if (samples) {
    if (*samples < 1) {
      throw pmpc::ConfigurationError("--samples: must be >= 1");
    }
    cfg.verify.samples = *samples;
  }
  const auto& v = cfg.verify;
  std::vector<pmpc::ContactSurface> surfaces = cfg.scenario.mpc.surfaces;
  std::mt19937_64 rng(cfg.scenario.seed);
  for (int i = 0; i < v.random_surfaces; ++i) {
    surfaces.push_back(pmpc::random_surface(rng));
  }
  const pmpc::SoundnessReport sound =
      pmpc::check_soundness(surfaces, v.samples, v.xi_min, v.xi_max, cfg.scenario.seed);
  std::cout << "soundness: " << (sound.passed() ? "PASS" : "FAIL") << "  samples " << sound.samples << "  failures "
            << sound.failures << "  min margin " << sound.min_margin << '\n';

  pmpc::CoverageOptions copt;
  copt.margin = v.coverage_margin;
  copt.max_normal_force = v.max_normal_force;
  const pmpc::CoverageReport cov =
      pmpc::estimate_coverage(cfg.scenario.mpc.surfaces.front(), v.coverage_points, cfg.scenario.seed, copt);
  std::cout << "coverage: " << cov.inverted << "/" << cov.points << " = " << cov.fraction() << '\n';
  return sound.passed() ? kOk : kPropertyFailure;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Payload-aware centroidal MPC with contact-stable wrench parameters"};
  app.require_subcommand(1);

  Overrides sim_o, bench_o, verify_o;
  std::optional<int> runs;
  std::optional<long> samples;
  auto* sim = app.add_subcommand("simulate", "run one closed loop, write log.csv and summary.json");
  add_common(*sim, sim_o);
  auto* bench = app.add_subcommand("benchmark", "solve-time comparison, write timing.csv");
  add_common(*bench, bench_o);
  bench->add_option("--runs", runs, "number of repetitions (overrides benchmark.runs)");
  auto* verify = app.add_subcommand("verify-param", "soundness and coverage sampling of the parametrization");
  add_common(*verify, verify_o);
  verify->add_option("--samples", samples, "soundness samples (overrides verify.samples)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) {
      return cmd_simulate(sim_o);
    }
    if (*bench) {
      return cmd_benchmark(bench_o, runs);
    }
    return cmd_verify(verify_o, samples);
  } catch (const pmpc::ConfigurationError& e) {
    log(Level::Error, std::string("configuration error: ") + e.what());
    return kConfigError;
  } catch (const pmpc::SolverFailure& e) {
    log(Level::Error, std::string("solver failure: ") + e.what());
    return kSolverFailure;
  } catch (const pmpc::InfeasiblePhaseError& e) {
    log(Level::Error, std::string("configuration error: ") + e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    log(Level::Error, std::string("solver failure: ") + e.what());
    return kSolverFailure;
  }
}
