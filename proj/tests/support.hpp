// Shared fixtures for the test suites.
#pragma once

#include "pmpc/pmpc.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

namespace pmpc::testing {

/// Two feet at +-0.1 m, CoM 0.53 m above their midpoint, at rest.
inline CentroidalState standing_state(double com_height = 0.53) {
  CentroidalState x;
  x.com_position = Vector3(0.0, 0.0, com_height);
  x.contact_positions = {Vector3(0.0, 0.1, 0.0), Vector3(0.0, -0.1, 0.0)};
  return x;
}

/// Constant references matching standing_state(), both feet down.
inline HorizonReferences standing_references(int horizon, double com_height = 0.53) {
  HorizonReferences r;
  r.com.assign(horizon + 1, Vector3(0.0, 0.0, com_height));
  r.footsteps = {std::vector<Vector3>(horizon + 1, Vector3(0.0, 0.1, 0.0)),
                 std::vector<Vector3>(horizon + 1, Vector3(0.0, -0.1, 0.0))};
  r.gait.assign(2, std::vector<bool>(horizon + 1, true));
  r.orientations.assign(2, Matrix3::Identity());
  return r;
}

/// A randomized two-contact MPC instance with a swing phase on the right foot.
struct RandomInstance {
  HorizonProblem problem;
  Eigen::VectorXd point;
};

template <typename Rng>
RandomInstance random_instance(Rng& rng, int horizon = 10) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MpcConfig cfg;
  cfg.horizon = horizon;
  HorizonReferences refs;
  const int phase = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int k = 0; k <= horizon; ++k) {
    refs.com.push_back(Vector3(0.05 * u(rng), 0.02 * u(rng), 0.53 + 0.01 * u(rng)));
  }
  const std::vector<Vector3> base{Vector3(0.0, 0.1, 0.0), Vector3(0.0, -0.1, 0.0)};
  refs.footsteps.resize(2);
  refs.gait.resize(2);
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k <= horizon; ++k) {
      // within the footstep box of the initial feet, so the instance stays feasible
      refs.footsteps[i].push_back(base[i] + Vector3(0.01 * u(rng), 0.01 * u(rng), 0.0));
      refs.gait[i].push_back(i == 0 || (k + phase) % 4 < 2);
    }
    refs.orientations.push_back(Eigen::AngleAxisd(0.3 * u(rng), Vector3::UnitZ()).toRotationMatrix());
  }
  CentroidalState x0;
  x0.com_position = Vector3(0.02 * u(rng), 0.02 * u(rng), 0.53 + 0.02 * u(rng));
  for (int j = 0; j < 6; ++j) {
    x0.momentum(j) = 0.1 * u(rng);
  }
  x0.contact_positions = {base[0] + Vector3(0.01 * u(rng), 0.01 * u(rng), 0.0),
                          base[1] + Vector3(0.01 * u(rng), 0.01 * u(rng), 0.0)};
  PayloadDisturbance d;
  for (int j = 0; j < 3; ++j) {
    d.left_wrench.force(j) = 0.5 * u(rng);
    d.right_wrench.force(j) = 0.5 * u(rng);
    d.left_wrench.moment(j) = 0.1 * u(rng);
    d.right_wrench.moment(j) = 0.1 * u(rng);
  }
  const double mass = 1.5 * (1.0 + u(rng)) / 2.0;
  d.left_wrench.force.z() -= mass * kGravity / 2.0;
  d.right_wrench.force.z() -= mass * kGravity / 2.0;
  d.left_point = x0.com_position + Vector3(0.25, 0.1, -0.1325);
  d.right_point = x0.com_position + Vector3(0.25, -0.1, -0.1325);

  RandomInstance out{build_mpc_problem(x0, refs, d, Weights{}, cfg), {}};
  out.point.resize(out.problem.num_variables());
  for (Eigen::Index j = 0; j < out.point.size(); ++j) {
    out.point(j) = 0.5 * u(rng);
  }
  return out;
}

/// |a - b|_inf / max(|b|_inf, tiny)
inline double relative_inf_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), 1e-300);
}

} // namespace pmpc::testing
