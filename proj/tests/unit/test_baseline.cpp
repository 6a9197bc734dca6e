#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pmpc;
using Catch::Approx;

namespace {

BaselineProblem random_baseline(std::mt19937_64& rng, Eigen::VectorXd& z) {
  const auto inst = testing::random_instance(rng);
  const HorizonProblem& h = inst.problem;
  BaselineProblem b = build_constrained_mpc(h.initial_state, h.references, h.payload.front(), h.weights, h.config);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  z.resize(b.num_variables());
  for (int k = 0; k < b.horizon(); ++k) {
    for (int i = 0; i < b.num_contacts(); ++i) {
      Vector6 w;
      w << u(rng), u(rng), 5.0 + u(rng), 0.1 * u(rng), 0.1 * u(rng), 0.01 * u(rng);
      z.segment<6>(b.wrench_index(k, i)) = w;
      z.segment<3>(b.velocity_index(k, i)) = Vector3(u(rng), u(rng), u(rng)) * 0.2;
    }
  }
  return b;
}

} // namespace

TEST_CASE("smooth stability residuals agree with the stability test", "[baseline][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 5000; ++n) {
    const ContactSurface s = n % 2 ? random_surface(rng) : ContactSurface{};
    Vector6 w;
    w << 3.0 * u(rng), 3.0 * u(rng), 10.0 * (u(rng) + 1.0) + 0.02, 2.0 * u(rng), 2.0 * u(rng), 0.3 * u(rng);
    const auto r = stability_residuals(w, s);
    bool all_positive = true;
    for (double v : r) {
      all_positive = all_positive && v > 0.0;
    }
    REQUIRE(all_positive == is_contact_stable(w, s).satisfied);
  }
}

TEST_CASE("stability residual Jacobian", "[baseline][property]") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 100; ++n) {
    const ContactSurface s = random_surface(rng);
    Vector6 w;
    w << u(rng), u(rng), 5.0 + u(rng), 0.2 * u(rng), 0.2 * u(rng), 0.05 * u(rng);
    const auto j = stability_residual_jacobian(w, s);
    for (int c = 0; c < 6; ++c) {
      const double h = 1e-6;
      Vector6 p = w, m = w;
      p(c) += h;
      m(c) -= h;
      const auto rp = stability_residuals(p, s), rm = stability_residuals(m, s);
      for (int r = 0; r < 5; ++r) {
        REQUIRE(j(r, c) == Approx((rp[r] - rm[r]) / (2.0 * h)).margin(1e-6));
      }
    }
  }
}

TEST_CASE("constraint counts", "[baseline]") {
  const MpcConfig cfg;
  const auto [param_rows, baseline_rows] = double_support_inequalities(cfg);
  CHECK(param_rows == 12);
  CHECK(baseline_rows == 22);

  HorizonReferences refs = testing::standing_references(10);
  refs.gait[1][3] = false;
  const BaselineProblem b = build_constrained_mpc(testing::standing_state(), refs, PayloadDisturbance{}, Weights{}, cfg);
  CHECK(b.num_variables() == 180);
  CHECK(b.constraints_at_step(3) == 17);
  // stability rows only for active contacts at steps 0..n_p-1
  CHECK(b.num_stability_constraints() == (10 * 2 - 1) * 5);
  CHECK(b.num_constraints() == (10 * 2 - 1) * 5 + 10 * 12);
}

TEST_CASE("baseline gradients", "[baseline][property]") {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 10; ++n) {
    Eigen::VectorXd z;
    const BaselineProblem b = random_baseline(rng, z);
    Eigen::VectorXd g;
    (void)b.objective(z, g);
    REQUIRE(testing::relative_inf_error(g, finite_difference_gradient(b, z)) < 1e-5);
    Eigen::VectorXd mu(b.num_constraints());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      mu(j) = u(rng);
    }
    auto weighted = [&](const Eigen::VectorXd& v) { return mu.dot(b.constraints(v)); };
    REQUIRE(testing::relative_inf_error(b.constraint_vjp(z, mu), finite_difference_gradient(weighted, z)) < 1e-6);
  }
}

TEST_CASE("baseline static double support", "[baseline]") {
  const MpcConfig cfg;
  const CentroidalState x = testing::standing_state();
  const HorizonReferences refs = testing::standing_references(10);
  const BaselineProblem b = build_constrained_mpc(x, refs, PayloadDisturbance{}, Weights{}, cfg);
  const BaselineOutput out = baseline_receding_step(b);
  const double half = cfg.robot.mass * kGravity / 2.0;
  for (int i = 0; i < 2; ++i) {
    CHECK(out.wrenches[i].force.z() == Approx(half).epsilon(0.01));
    const auto rep = is_contact_stable(out.wrenches[i], cfg.surfaces[i]);
    CHECK(rep.min_margin() >= -cfg.solver.constraint_tolerance);
  }

  // same physics as the parametrized controller: predicted CoM paths agree
  const auto p = build_mpc_problem(x, refs, PayloadDisturbance{}, Weights{}, cfg);
  const RecedingHorizonOutput po = receding_horizon_step(p);
  const auto xs_b = b.rollout(out.stats.x);
  const auto xs_p = p.rollout(po.stats.x);
  double worst = 0.0;
  for (std::size_t k = 0; k < xs_b.size(); ++k) {
    worst = std::max(worst, (xs_b[k].com_position - xs_p[k].com_position).norm());
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("static double support agreement without parameter regularization", "[baseline]") {
  // with Q_xi = 0 the two objectives coincide on this problem
  const MpcConfig cfg;
  Weights w;
  w.q_xi.setZero();
  const CentroidalState x = testing::standing_state();
  const HorizonReferences refs = testing::standing_references(10);
  const BaselineProblem b = build_constrained_mpc(x, refs, PayloadDisturbance{}, w, cfg);
  const BaselineOutput out = baseline_receding_step(b);
  const auto p = build_mpc_problem(x, refs, PayloadDisturbance{}, w, cfg);
  const RecedingHorizonOutput po = receding_horizon_step(p);
  REQUIRE(out.stats.converged());
  REQUIRE(po.stats.converged());
  const auto xs_b = b.rollout(out.stats.x);
  const auto xs_p = p.rollout(po.stats.x);
  for (std::size_t k = 0; k < xs_b.size(); ++k) {
    CHECK((xs_b[k].com_position - xs_p[k].com_position).norm() < 1e-3);
  }
}

TEST_CASE("baseline solutions satisfy the stability constraints", "[baseline][property]") {
  std::mt19937_64 rng(47);
  for (int n = 0; n < 3; ++n) {
    const auto inst = testing::random_instance(rng);
    const HorizonProblem& h = inst.problem;
    MpcConfig cfg = h.config;
    cfg.solver.max_iterations = 1000;
    const BaselineProblem b = build_constrained_mpc(h.initial_state, h.references, h.payload.front(), h.weights, cfg);
    const BaselineOutput out = baseline_receding_step(b);
    REQUIRE(out.stats.converged());
    for (const auto& [k, i] : b.stability_blocks()) {
      const auto rep = is_contact_stable(b.local_wrench(out.stats.x, k, i), cfg.surfaces[i]);
      REQUIRE(rep.min_margin() >= -1e-6);
    }
  }
}
