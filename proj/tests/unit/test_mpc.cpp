#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pmpc;
using Catch::Approx;

namespace {

HorizonReferences single_step_refs() {
  HorizonReferences r = testing::standing_references(1);
  return r;
}

std::vector<CentroidalState> two_states(const CentroidalState& x) { return {x, x}; }

} // namespace

TEST_CASE("payload zero-order hold", "[mpc]") {
  CHECK(hold_payload_over_horizon(PayloadDisturbance{}, 4) == std::vector<PayloadDisturbance>(4));
  PayloadDisturbance d;
  d.right_wrench.force = Vector3(0, 0, -14.715);
  d.right_point = Vector3(0.25, -0.1, 0.4);
  const auto held = hold_payload_over_horizon(d, 10);
  REQUIRE(held.size() == 10);
  for (const auto& h : held) {
    CHECK(h == d);
  }
  CHECK_THROWS_AS(hold_payload_over_horizon(d, 0), ConfigurationError);
}

TEST_CASE("tracking cost examples", "[mpc]") {
  const Weights w;
  const HorizonReferences refs = single_step_refs();
  CentroidalState x = testing::standing_state();
  CHECK(tracking_cost({x}, refs, w) == 0.0);

  x.com_position.z() += 0.1;
  CHECK(tracking_cost({x}, refs, w) == Approx(5.0));

  x = testing::standing_state();
  x.momentum << 3.0, 2.0, 1.0, 0.1, 0.0, 0.0; // linear momentum is not penalized
  CHECK(tracking_cost({x}, refs, w) == Approx(0.5));
}

TEST_CASE("footstep cost examples", "[mpc]") {
  const Weights w;
  const HorizonReferences refs = single_step_refs();
  CentroidalState x = testing::standing_state();
  CHECK(footstep_cost({x}, refs, w) == 0.0);
  x.contact_positions[0].x() += 0.01;
  CHECK(footstep_cost({x}, refs, w) == Approx(0.01));
  CentroidalState y = testing::standing_state();
  y.contact_positions[0].y() += 0.02;
  CentroidalState xy = testing::standing_state();
  xy.contact_positions[0] += Vector3(0.01, 0.02, 0.0);
  CHECK(footstep_cost({xy}, refs, w) == Approx(footstep_cost({x}, refs, w) + footstep_cost({y}, refs, w)));
}

TEST_CASE("parameter regularization examples", "[mpc]") {
  const Weights w;
  CHECK(parameter_regularization_cost({{Vector6::Zero(), Vector6::Zero()}}, w) == 0.0);
  Vector6 xi = Vector6::Zero();
  xi(0) = 1.0;
  CHECK(parameter_regularization_cost({{xi}}, w) == Approx(5.0));
  const Vector6 r = Vector6::LinSpaced(-1.0, 2.0);
  CHECK(parameter_regularization_cost({{2.0 * r}}, w) == Approx(4.0 * parameter_regularization_cost({{r}}, w)));
}

TEST_CASE("payload attenuation cost examples", "[mpc]") {
  Weights w;
  const RobotConstants robot;
  HorizonReferences refs = single_step_refs();
  const CentroidalState x = testing::standing_state();
  const std::vector<PayloadDisturbance> none(1);

  SECTION("gravity share on two contacts") {
    Vector6 half = robot.mass * robot.gravity_vector / 2.0;
    CHECK(payload_attenuation_cost({{half, half}}, two_states(x), none, refs, robot, w) < 1e-24);
  }

  SECTION("gravity on one contact below the CoM") {
    refs.gait[1] = {false, false};
    CentroidalState below = x;
    below.contact_positions[0] = Vector3(0.0, 0.0, 0.0);
    Vector6 full = robot.mass * robot.gravity_vector;
    CHECK(payload_attenuation_cost({{full, Vector6::Zero()}}, two_states(below), none, refs, robot, w) < 1e-24);
  }

  SECTION("payload at the CoM compensated by a contact at the CoM") {
    refs.gait[1] = {false, false};
    CentroidalState at = x;
    at.contact_positions[0] = at.com_position;
    PayloadDisturbance d;
    d.left_wrench.force = Vector3(0, 0, -14.715);
    d.left_point = at.com_position;
    const std::vector<Vector3> points{at.com_position};
    const auto targets = compensation_targets(points, at.com_position, d, robot);
    REQUIRE(targets.size() == 1);
    Vector6 expected;
    expected << 0, 0, 24.525, 0, 0, 0;
    CHECK((targets[0] - expected).norm() < 1e-12);
    const std::vector<PayloadDisturbance> held(1, d);
    CHECK(payload_attenuation_cost({{expected, Vector6::Zero()}}, two_states(at), held, refs, robot, w) < 1e-20);
  }

  SECTION("no active contact") {
    refs.gait = {{false, false}, {false, false}};
    const Vector6 z = Vector6::Zero();
    CHECK_THROWS_AS(payload_attenuation_cost({{z, z}}, two_states(x), none, refs, robot, w), InfeasiblePhaseError);
  }
}

TEST_CASE("compensation targets cancel the payload wrench", "[mpc][property]") {
  // the payload part t_i - m g / N solves sum_i A_i x_i = -A_d d with minimum norm
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const RobotConstants robot;
  for (int n = 0; n < 100; ++n) {
    const Vector3 com(0.1 * u(rng), 0.1 * u(rng), 0.53);
    std::vector<Vector3> points{Vector3(u(rng) * 0.1, 0.1, 0.0)};
    if (n % 2) {
      points.push_back(Vector3(u(rng) * 0.1, -0.1, 0.0));
    }
    PayloadDisturbance d = attach_payload(payload_from_mass(1.5 * (u(rng) + 1.0)), com);
    d.left_wrench.moment = Vector3(u(rng), u(rng), u(rng)) * 0.1;
    const auto t = compensation_targets(points, com, d, robot);
    const Vector6 share = robot.mass * robot.gravity_vector / static_cast<double>(points.size());

    const auto count = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a(6, 6 * count);
    Eigen::VectorXd x(6 * count);
    for (Eigen::Index i = 0; i < count; ++i) {
      a.middleCols<6>(6 * i) = wrench_transport_map(points[i], com);
      x.segment<6>(6 * i) = t[i] - share;
    }
    const Vector6 residual = a * x + detail::payload_wrench_at_com(d, com);
    REQUIRE(residual.norm() < 1e-10);

    // any other solution differs by a null-space vector and is longer
    Eigen::VectorXd v(6 * count);
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      v(j) = u(rng);
    }
    const Eigen::VectorXd null_part = v - a.transpose() * (a * a.transpose()).ldlt().solve(a * v);
    REQUIRE((a * null_part).norm() < 1e-9);
    REQUIRE((x + null_part).norm() >= x.norm() - 1e-12);
    REQUIRE(std::abs(x.dot(null_part)) < 1e-9 * std::max(1.0, x.norm() * null_part.norm()));
  }
}

TEST_CASE("footstep bound residuals", "[mpc]") {
  MpcConfig cfg;
  cfg.footstep_ub = Vector3(0.05, 0.05, 0.01);
  cfg.footstep_lb = -cfg.footstep_ub;
  HorizonReferences refs = single_step_refs();
  CentroidalState x1 = testing::standing_state();

  x1.contact_positions[0].x() += 0.02;
  Eigen::VectorXd r = footstep_bound_residuals({testing::standing_state(), x1}, refs, cfg);
  REQUIRE(r.size() == 12);
  CHECK(r.minCoeff() > 0.0);

  x1.contact_positions[0].x() += 0.04; // 0.06 > ub_x
  r = footstep_bound_residuals({testing::standing_state(), x1}, refs, cfg);
  CHECK(r(3) == Approx(-0.01));
  CHECK(r(0) > 0.0);

  // 90 degree yaw: world +x error is contact-frame -y
  refs.orientations[0] = Eigen::AngleAxisd(std::acos(-1.0) / 2.0, Vector3::UnitZ()).toRotationMatrix();
  x1 = testing::standing_state();
  x1.contact_positions[0].x() += 0.02;
  r = footstep_bound_residuals({testing::standing_state(), x1}, refs, cfg);
  CHECK(r(0) == Approx(0.05).margin(1e-12));  // e_x - lb_x
  CHECK(r(1) == Approx(0.03).margin(1e-12));  // e_y = -0.02
  CHECK(r(4) == Approx(0.07).margin(1e-12));  // ub_y - e_y

  cfg.bound_mode = FootstepBoundMode::Norm;
  r = footstep_bound_residuals({testing::standing_state(), x1}, refs, cfg);
  REQUIRE(r.size() == 2);
  CHECK(r(0) == Approx(0.05 * 0.05 - 0.02 * 0.02));
}

TEST_CASE("problem layout and validation", "[mpc]") {
  const MpcConfig cfg;
  const auto p = build_mpc_problem(testing::standing_state(), testing::standing_references(10), PayloadDisturbance{},
                                   Weights{}, cfg);
  CHECK(p.num_variables() == 180);
  CHECK(p.num_constraints() == 10 * 2 * 6);
  CHECK(p.constraints_per_step() == 12);
  CHECK(p.payload.size() == 10);

  CHECK_THROWS_AS(build_mpc_problem(testing::standing_state(), testing::standing_references(9), PayloadDisturbance{},
                                    Weights{}, cfg),
                  ConfigurationError);
  CentroidalState bad = testing::standing_state();
  bad.com_position.x() = std::nan("");
  CHECK_THROWS_AS(build_mpc_problem(bad, testing::standing_references(10), PayloadDisturbance{}, Weights{}, cfg),
                  ConfigurationError);
}

TEST_CASE("objective decomposes into the task costs", "[mpc][property]") {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 10; ++n) {
    const auto inst = testing::random_instance(rng);
    const HorizonProblem& p = inst.problem;
    const auto xs = p.rollout(inst.point);
    const InputTrajectory u = p.inputs(inst.point);
    const CostBreakdown c = p.costs(inst.point);
    const double th = tracking_cost(xs, p.references, p.weights);
    const double tpc = footstep_cost(xs, p.references, p.weights);
    const double td = payload_attenuation_cost(u.wrench, xs, p.payload, p.references, p.config.robot, p.weights);
    const double txi = parameter_regularization_cost(p.parameters(inst.point), p.weights);
    const double tv = velocity_regularization_cost(u.velocity, p.weights);
    Eigen::VectorXd g;
    const double f = p.objective(inst.point, g);
    CHECK(c.centroidal == Approx(th).epsilon(1e-12));
    CHECK(c.footstep == Approx(tpc).epsilon(1e-12));
    CHECK(c.payload == Approx(td).epsilon(1e-12));
    CHECK(c.parameter == Approx(txi).epsilon(1e-12));
    CHECK(c.velocity == Approx(tv).epsilon(1e-12));
    CHECK(std::abs(f - (th + tpc + td + txi + tv)) <= 1e-12 * std::max(1.0, std::abs(f)));
  }
}

TEST_CASE("disabling the payload task removes it from the objective", "[mpc]") {
  std::mt19937_64 rng(19);
  auto inst = testing::random_instance(rng);
  inst.problem.weights.payload_task = false;
  CHECK(inst.problem.costs(inst.point).payload == 0.0);
  Eigen::VectorXd g;
  (void)inst.problem.objective(inst.point, g);
  CHECK(testing::relative_inf_error(g, finite_difference_gradient(inst.problem, inst.point)) < 1e-5);
}

TEST_CASE("static double support without payload", "[mpc]") {
  const MpcConfig cfg;
  const auto p = build_mpc_problem(testing::standing_state(), testing::standing_references(10), PayloadDisturbance{},
                                   Weights{}, cfg);
  const RecedingHorizonOutput a = receding_horizon_step(p);
  const double half = cfg.robot.mass * kGravity / 2.0;
  for (const auto& w : a.input.wrenches) {
    CHECK(w.force.z() == Approx(half).epsilon(0.01));
    CHECK(std::abs(w.force.x()) < 1e-3);
    CHECK(is_contact_stable(w, cfg.surfaces[0]).satisfied);
  }
  // symmetric instance: the two vertical forces agree within 1 %
  const double f0 = a.input.wrenches[0].force.z(), f1 = a.input.wrenches[1].force.z();
  CHECK(std::abs(f0 - f1) < 0.01 * std::max(f0, f1));

  // the gravity-share cold start is already near-optimal
  const WarmStart cold = initial_warm_start(p);
  for (int i = 0; i < 2; ++i) {
    const Vector6 xi = cold.decision.segment<6>(p.xi_index(0, i));
    CHECK(parametrize(xi, cfg.surfaces[i])(2) == Approx(half).epsilon(1e-9));
  }

  // fixed point of the receding horizon
  const RecedingHorizonOutput b = receding_horizon_step(p, WarmStart{a.stats.x, a.stats.multipliers});
  for (int i = 0; i < 2; ++i) {
    CHECK((a.input.wrenches[i].stacked() - b.input.wrenches[i].stacked()).norm() < 1e-6);
  }
}

TEST_CASE("static double support with a payload between the feet", "[mpc]") {
  MpcConfig cfg;
  PayloadDisturbance d;
  const CentroidalState x = testing::standing_state();
  d.left_wrench.force = Vector3(0, 0, -1.5 * kGravity / 2.0);
  d.right_wrench.force = d.left_wrench.force;
  d.left_point = x.com_position + Vector3(0.0, 0.05, -0.2);
  d.right_point = x.com_position + Vector3(0.0, -0.05, -0.2);
  const auto p = build_mpc_problem(x, testing::standing_references(10), d, Weights{}, cfg);
  const RecedingHorizonOutput r = receding_horizon_step(p);
  const double fz = r.input.wrenches[0].force.z() + r.input.wrenches[1].force.z();
  CHECK(fz == Approx(2.5 * kGravity).epsilon(0.01));
}

TEST_CASE("shifted warm start", "[mpc]") {
  Eigen::VectorXd v(12);
  for (int j = 0; j < 12; ++j) {
    v(j) = j;
  }
  const Eigen::VectorXd s = shift_blocks(v, 4);
  CHECK(s.head(8) == v.tail(8));
  CHECK(s.tail(4) == v.tail(4));

  // static problem: the shifted optimum evaluates the next problem close to
  // its own optimum (regression threshold)
  const MpcConfig cfg;
  const CentroidalState x = testing::standing_state();
  const PayloadDisturbance d = attach_payload(payload_from_mass(1.5), x.com_position);
  const auto p = build_mpc_problem(x, testing::standing_references(10), d, Weights{}, cfg);
  const RecedingHorizonOutput a = receding_horizon_step(p);
  const auto next_states = p.rollout(a.stats.x);
  const auto q = build_mpc_problem(next_states[1], testing::standing_references(10), d, Weights{}, cfg);
  const RecedingHorizonOutput b = receding_horizon_step(q, a.next_warm_start);
  Eigen::VectorXd g;
  const double shifted = q.objective(a.next_warm_start.decision, g);
  CHECK(shifted >= b.stats.objective - 1e-9 * std::max(1.0, b.stats.objective));
  CHECK(shifted - b.stats.objective <= 0.05 * std::max(1.0, b.stats.objective));
}

TEST_CASE("random restarts agree with the gravity-share start", "[mpc]") {
  MpcConfig cfg;
  cfg.horizon = 2;
  cfg.solver.max_iterations = 2000;
  const auto p = build_mpc_problem(testing::standing_state(), testing::standing_references(2), PayloadDisturbance{},
                                   Weights{}, cfg);
  const WarmStart cold = initial_warm_start(p);
  const SolverResult base = solve(p, cold.decision, cfg.solver);
  REQUIRE(base.status != SolverStatus::LineSearchFailure);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int n = 0; n < 8; ++n) {
    Eigen::VectorXd z0(p.num_variables());
    for (Eigen::Index j = 0; j < z0.size(); ++j) {
      z0(j) = u(rng);
    }
    const SolverResult r = solve(p, z0, cfg.solver);
    if (r.status != SolverStatus::LineSearchFailure && r.constraint_violation <= 1e-6) {
      best = std::min(best, r.objective);
    }
  }
  CHECK(base.objective <= best + 1e-6 * std::max(1.0, best));
}
