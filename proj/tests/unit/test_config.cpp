#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <string>

using namespace pmpc;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)parse_run_config(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST_CASE("empty document gives the defaults", "[config]") {
  const RunConfig c = parse_run_config(std::string("{}"));
  CHECK(c.output_dir == "out");
  CHECK(c.scenario.mpc.horizon == 10);
  CHECK(c.scenario.mpc.dt == 0.2);
  CHECK(c.scenario.weights.q_c == Matrix3(Vector3(1.0, 1.0, 1000.0).asDiagonal()));
  CHECK(c.scenario.payload.mass == 1.5);
  CHECK(c.benchmark.runs == 1);
  CHECK(c.benchmark.mode == TimingMode::SharedTrace);
  CHECK(c.verify.samples == 1000000);
}

TEST_CASE("values are read into the scenario", "[config]") {
  const RunConfig c = parse_run_config(std::string(R"({
    "output_dir": "x", "controller": "baseline", "duration": 3.0, "seed": 9,
    "robot": {"mass": 2.0},
    "mpc": {"horizon": 6, "footstep_ub": [0.1, 0.1, 0.01], "bound_mode": "norm", "norm_bound": 0.07},
    "surfaces": [{"mu_c": 0.5}, {"x_min": -0.2}],
    "weights": {"q_c": [1, 2, 3], "q_d": [[1,0,0,0,0,0],[0,1,0,0,0,0],[0,0,1,0,0,0],[0,0,0,1,0,0],[0,0,0,0,1,0],[0,0,0,0,0,1]], "payload_task": false},
    "solver": {"max_iterations": 50, "kkt_tolerance": 1e-5},
    "gait": {"number_of_steps": 2},
    "payload": {"mass": 0.5, "onset": 1.0},
    "benchmark": {"runs": 3, "mode": "closed-loop"},
    "verify": {"samples": 10}
  })"));
  CHECK(c.output_dir == "x");
  CHECK(c.scenario.controller == ControllerKind::Baseline);
  CHECK(c.scenario.duration == 3.0);
  CHECK(c.scenario.seed == 9);
  CHECK(c.scenario.mpc.robot.mass == 2.0);
  CHECK(c.scenario.mpc.horizon == 6);
  CHECK(c.scenario.mpc.footstep_ub == Vector3(0.1, 0.1, 0.01));
  CHECK(c.scenario.mpc.bound_mode == FootstepBoundMode::Norm);
  CHECK(c.scenario.mpc.surfaces[0].mu_c == 0.5);
  CHECK(c.scenario.mpc.surfaces[1].x_min == -0.2);
  CHECK(c.scenario.weights.q_c.diagonal() == Vector3(1, 2, 3));
  CHECK(c.scenario.weights.q_d == Matrix6::Identity());
  CHECK_FALSE(c.scenario.weights.payload_task);
  CHECK(c.scenario.mpc.solver.max_iterations == 50);
  CHECK(c.scenario.gait.number_of_steps == 2);
  CHECK(c.scenario.payload.onset == 1.0);
  CHECK(c.benchmark.runs == 3);
  CHECK(c.benchmark.mode == TimingMode::ClosedLoop);
  CHECK(c.verify.samples == 10);
}

TEST_CASE("invalid documents name the offending key", "[config]") {
  CHECK_THAT(error_of(R"({"robot": {"mass": -1}})"), ContainsSubstring("robot.mass"));
  CHECK_THAT(error_of(R"({"payload": {"mass": -1}})"), ContainsSubstring("payload.mass"));
  CHECK_THAT(error_of(R"({"robot": {"mas": 1}})"), ContainsSubstring("robot.mas: unknown key"));
  CHECK_THAT(error_of(R"({"speed": 1})"), ContainsSubstring("speed: unknown key"));
  CHECK_THAT(error_of(R"({"surfaces": [{}, {"x_min": 0.3, "x_max": 0.1}]})"), ContainsSubstring("surfaces[1]"));
  CHECK_THAT(error_of(R"({"benchmark": {"runs": 0}})"), ContainsSubstring("benchmark.runs"));
  CHECK_THAT(error_of(R"({"mpc": {"horizon": "ten"}})"), ContainsSubstring("mpc.horizon"));
  CHECK_THAT(error_of(R"({"weights": {"q_c": [1, 2]}})"), ContainsSubstring("weights.q_c"));
  CHECK_THAT(error_of(R"({"controller": "mpc"})"), ContainsSubstring("controller"));
  CHECK_FALSE(error_of("{not json").empty());
  CHECK_FALSE(error_of(R"({"plant_dt": 0.03})").empty());
}

TEST_CASE("shipped configurations load", "[config]") {
  for (const char* name : {"walking_payload.json", "static_payload.json", "benchmark_30s.json"}) {
    const RunConfig c = load_run_config(std::string(PMPC_SOURCE_DIR) + "/configs/" + name);
    CHECK(c.scenario.payload.mass == 1.5);
    CHECK(c.scenario.gait.com_height == 0.53);
  }
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigurationError);
}
