#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace pmpc;
using Catch::Approx;

namespace {

Scenario standing(double duration, double payload_mass) {
  Scenario s;
  s.gait.number_of_steps = 0;
  s.duration = duration;
  s.payload.mass = payload_mass;
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  return out;
}

} // namespace

TEST_CASE("zero-payload double support regulation", "[sim]") {
  const SimLog log = run_closed_loop(standing(10.0, 0.0));
  REQUIRE_FALSE(log.failed);
  CHECK(log.ticks.size() == 50);
  CHECK(log.samples.size() == 1000);
  double worst = 0.0;
  for (const auto& s : log.samples) {
    worst = std::max(worst, (s.state.com_position - s.com_reference).norm());
  }
  CHECK(worst < 0.005);
  CHECK(log.unstable_wrenches == 0);
  CHECK(log.flight_ticks == 0);
}

TEST_CASE("closed loop is deterministic", "[sim][property]") {
  Scenario s = standing(1.0, 1.5);
  s.initial_com_jitter = 0.005;
  s.seed = 4;
  const SimLog a = run_closed_loop(s);
  const SimLog b = run_closed_loop(s);
  CHECK(a == b);
  s.seed = 5;
  const SimLog c = run_closed_loop(s);
  CHECK_FALSE(a.samples.front().state == c.samples.front().state);
}

TEST_CASE("zero payload mass equals no payload", "[sim][property]") {
  Scenario s = standing(1.0, 0.0);
  const SimLog a = run_closed_loop(s);
  s.payload.onset = 100.0; // never switched on
  s.payload.mass = 3.0;
  const SimLog b = run_closed_loop(s);
  CHECK(a == b);
  for (const auto& smp : a.samples) {
    REQUIRE(smp.payload_fz == 0.0);
  }
}

TEST_CASE("monotone time and logged wrenches are stable", "[sim][property]") {
  Scenario s;
  s.gait.number_of_steps = 2;
  s.duration = 3.2;
  const SimLog log = run_closed_loop(s);
  REQUIRE_FALSE(log.failed);
  for (std::size_t k = 1; k < log.samples.size(); ++k) {
    REQUIRE(log.samples[k].time > log.samples[k - 1].time);
  }
  CHECK(log.unstable_wrenches == 0);
  CHECK(log.flight_ticks == 0);
  CHECK(log.landings.size() == 2);
  for (const auto& l : log.landings) {
    CHECK(l.inside_bounds);
  }
  // standing feet do not move within a phase
  for (std::size_t k = 1; k < log.samples.size(); ++k) {
    for (int i = 0; i < 2; ++i) {
      if (log.samples[k].active[i] && log.samples[k - 1].active[i]) {
        REQUIRE(log.samples[k].state.contact_positions[i] == log.samples[k - 1].state.contact_positions[i]);
      }
    }
  }
}

TEST_CASE("zero-duration scenario", "[sim]") {
  const SimLog log = run_closed_loop(standing(0.0, 1.5));
  CHECK(log.ticks.empty());
  CHECK(log.samples.empty());
  const TimingReport r = compare_timing(standing(0.0, 1.5), 1);
  CHECK(r.records.empty());
  CHECK(r.parametrized.solves == 0);
}

TEST_CASE("scenario validation", "[sim]") {
  Scenario s;
  s.plant_dt = 0.03;
  CHECK_THROWS_AS(run_closed_loop(s), ConfigurationError);
  s = Scenario{};
  s.payload.mass = -1.0;
  CHECK_THROWS_AS(run_closed_loop(s), ConfigurationError);
  CHECK_THROWS_AS(parse_controller("mpc"), ConfigurationError);
  CHECK(parse_controller("param-no-td") == ControllerKind::ParametrizedNoTd);
}

TEST_CASE("CSV schema", "[sim]") {
  const auto header = csv_header(2);
  std::vector<std::string> expected{"t", "com_x", "com_y", "com_z", "ref_com_x", "ref_com_y", "ref_com_z",
                                    "hl_x", "hl_y", "hl_z", "hw_x", "hw_y", "hw_z"};
  for (int i = 0; i < 2; ++i) {
    const std::string c = "c" + std::to_string(i);
    for (const char* a : {"_x", "_y", "_z"}) {
      expected.push_back(c + a);
    }
    for (const char* a : {"_ref_x", "_ref_y", "_ref_z"}) {
      expected.push_back(c + a);
    }
    expected.push_back(c + "_active");
    for (const char* p : {"f", "m"}) {
      for (const char* a : {"_x", "_y", "_z"}) {
        expected.push_back(p + std::to_string(i) + a);
      }
    }
    for (int j = 1; j <= 6; ++j) {
      expected.push_back("xi_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  for (const char* c : {"d_fz_total", "cost_Th", "cost_Tpc", "cost_Td", "cost_Txi", "solve_ms", "iterations", "status"}) {
    expected.push_back(c);
  }
  CHECK(header == expected);

  const SimLog log = run_closed_loop(standing(0.4, 1.5));
  std::stringstream ss;
  write_csv(log, ss);
  std::string line;
  std::getline(ss, line);
  CHECK(split(line) == expected);
  int rows = 0;
  while (std::getline(ss, line)) {
    const auto cells = split(line);
    REQUIRE(cells.size() == expected.size());
    CHECK(std::stod(cells[0]) == Approx(rows * 0.01).margin(1e-12));
    CHECK(std::stod(cells[expected.size() - 8]) == Approx(-1.5 * kGravity));
    ++rows;
  }
  CHECK(rows == 40);
}
