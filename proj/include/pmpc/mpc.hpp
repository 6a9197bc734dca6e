/**
 * @file mpc.hpp
 * @brief Payload-aware centroidal MPC over contact-stable wrench parameters.
 *
 * Decision vector, per horizon step k (n_c contacts):
 *   [xi_0(k) ... xi_{n_c-1}(k) | v_0(k) ... v_{n_c-1}(k)]   (6 n_c + 3 n_c)
 * States are eliminated by an explicit Euler rollout (single shooting), so
 * the only inequalities left are the footstep bounds: the parametrization
 * makes every foot wrench contact-stable for any value of xi.
 */
#pragma once

#include "pmpc/horizon.hpp"
#include "pmpc/solver.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pmpc {

class HorizonProblem {
public:
  CentroidalState initial_state;
  HorizonReferences references;
  std::vector<PayloadDisturbance> payload; ///< n_p held samples
  Weights weights;
  MpcConfig config;

  [[nodiscard]] int horizon() const { return config.horizon; }
  [[nodiscard]] int num_contacts() const { return config.num_contacts(); }
  [[nodiscard]] Eigen::Index step_size() const { return 9 * num_contacts(); }
  [[nodiscard]] Eigen::Index num_variables() const { return horizon() * step_size(); }
  [[nodiscard]] Eigen::Index constraints_per_step() const {
    return num_contacts() * (config.bound_mode == FootstepBoundMode::Box ? 6 : 1);
  }
  [[nodiscard]] Eigen::Index num_constraints() const { return horizon() * constraints_per_step(); }
  [[nodiscard]] Eigen::Index xi_index(int k, int i) const { return k * step_size() + 6 * i; }
  [[nodiscard]] Eigen::Index velocity_index(int k, int i) const {
    return k * step_size() + 6 * num_contacts() + 3 * i;
  }

  [[nodiscard]] std::vector<std::vector<Vector6>> parameters(const Eigen::VectorXd& z) const {
    std::vector<std::vector<Vector6>> xi(horizon(), std::vector<Vector6>(num_contacts()));
    for (int k = 0; k < horizon(); ++k) {
      for (int i = 0; i < num_contacts(); ++i) {
        xi[k][i] = z.segment<6>(xi_index(k, i));
      }
    }
    return xi;
  }

  /// Inertial-frame wrenches phi(xi) rotated by R_Ci, plus velocities.
  [[nodiscard]] InputTrajectory inputs(const Eigen::VectorXd& z) const {
    InputTrajectory u(horizon(), num_contacts());
    for (int k = 0; k < horizon(); ++k) {
      for (int i = 0; i < num_contacts(); ++i) {
        const Vector6 w = parametrize(z.segment<6>(xi_index(k, i)), config.surfaces[i]);
        const Matrix3& r = references.orientations[i];
        u.wrench[k][i] << r * w.head<3>(), r * w.tail<3>();
        u.velocity[k][i] = z.segment<3>(velocity_index(k, i));
      }
    }
    return u;
  }

  [[nodiscard]] std::vector<CentroidalState> rollout(const Eigen::VectorXd& z) const {
    return detail::rollout(initial_state, inputs(z), references, payload, config.robot, config.dt);
  }

  [[nodiscard]] CostBreakdown costs(const Eigen::VectorXd& z) const {
    CostBreakdown c;
    evaluate(z, nullptr, &c);
    return c;
  }

  [[nodiscard]] double objective(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
    return evaluate(z, &grad, nullptr);
  }

  [[nodiscard]] Eigen::VectorXd constraints(const Eigen::VectorXd& z) const {
    return footstep_bound_residuals(rollout(z), references, config);
  }

  [[nodiscard]] Eigen::VectorXd constraint_vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& mu) const {
    const auto xs = rollout(z);
    const auto v_bar = detail::footstep_bound_vjp(xs, references, config, mu);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(num_variables());
    for (int k = 0; k < horizon(); ++k) {
      for (int i = 0; i < num_contacts(); ++i) {
        out.segment<3>(velocity_index(k, i)) = v_bar[k][i];
      }
    }
    return out;
  }

  /**
   * Gauss-Newton approximation of the Hessian of the objective plus the
   * `constraint_weights`-weighted squared footstep residuals. The payload
   * targets are treated as constant.
   */
  [[nodiscard]] Eigen::MatrixXd curvature(const Eigen::VectorXd& z, const Eigen::VectorXd& constraint_weights) const {
    const int np = horizon();
    const int nc = num_contacts();
    const InputTrajectory u = inputs(z);
    const auto xs = detail::rollout(initial_state, u, references, payload, config.robot, config.dt);
    Eigen::MatrixXd h =
        detail::tracking_gauss_newton(xs, u, references, payload, config.robot, config.dt, weights);
    std::vector<Matrix6> chain(static_cast<std::size_t>(np * nc));
    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        Matrix6 rot = Matrix6::Zero();
        rot.block<3, 3>(0, 0) = references.orientations[i];
        rot.block<3, 3>(3, 3) = references.orientations[i];
        chain[k * nc + i] = rot * parametrize_jacobian(z.segment<6>(xi_index(k, i)), config.surfaces[i]);
      }
    }
    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        const Eigen::Index b = xi_index(k, i);
        h.middleRows<6>(b) = (chain[k * nc + i].transpose() * h.middleRows<6>(b)).eval();
      }
    }
    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        const Eigen::Index b = xi_index(k, i);
        h.middleCols<6>(b) = (h.middleCols<6>(b) * chain[k * nc + i]).eval();
        if (weights.payload_task && references.gait[i][k]) {
          h.block<6, 6>(b, b) += chain[k * nc + i].transpose() * weights.q_d * chain[k * nc + i];
        }
        h.block<6, 6>(b, b) += weights.q_xi;
        h.block<3, 3>(velocity_index(k, i), velocity_index(k, i)) += weights.q_v;
      }
    }
    detail::add_footstep_bound_curvature(xs, references, config, constraint_weights, 0,
                                         [this](int k, int i) { return velocity_index(k, i); }, h);
    return h;
  }

private:
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad, CostBreakdown* breakdown) const {
    const int np = horizon();
    const int nc = num_contacts();
    if (!z.allFinite()) {
      return std::numeric_limits<double>::infinity();
    }
    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        if (!(std::abs(z(xi_index(k, i) + 2)) <= kMaxNormalParameter)) {
          // outside the domain of phi: reject the point
          return std::numeric_limits<double>::infinity();
        }
      }
    }
    const InputTrajectory u = inputs(z);
    const auto xs = detail::rollout(initial_state, u, references, payload, config.robot, config.dt);

    CostBreakdown cost;
    std::vector<CentroidalState> state_grad;
    InputTrajectory wrench_grad(np, nc); // explicit d cost / d inertial wrench
    if (grad) {
      state_grad.assign(np + 1, detail::zero_like(initial_state));
    }
    detail::add_tracking_terms(xs, references, weights, cost, grad ? &state_grad : nullptr);

    for (int k = 0; k < np; ++k) {
      if (weights.payload_task) {
        const auto ids = detail::active_contacts(references, k);
        std::vector<Vector3> points;
        for (auto i : ids) {
          points.push_back(xs[k].contact_positions[i]);
        }
        const auto targets = compensation_targets(points, xs[k].com_position, payload[k], config.robot);
        std::vector<Vector6> target_grad(ids.size());
        for (std::size_t a = 0; a < ids.size(); ++a) {
          const Vector6 r = u.wrench[k][ids[a]] - targets[a];
          const Vector6 qr = weights.q_d * r;
          cost.payload += 0.5 * r.dot(qr);
          wrench_grad.wrench[k][ids[a]] += qr;
          target_grad[a] = -qr;
        }
        if (grad) {
          std::vector<Vector3> point_grad(ids.size(), Vector3::Zero());
          detail::compensation_targets_vjp(points, xs[k].com_position, payload[k], target_grad,
                                           state_grad[k].com_position, point_grad);
          for (std::size_t a = 0; a < ids.size(); ++a) {
            state_grad[k].contact_positions[ids[a]] += point_grad[a];
          }
        }
      }
      for (int i = 0; i < nc; ++i) {
        const Vector6 xi = z.segment<6>(xi_index(k, i));
        const Vector3 v = z.segment<3>(velocity_index(k, i));
        cost.parameter += 0.5 * xi.dot(weights.q_xi * xi);
        cost.velocity += 0.5 * v.dot(weights.q_v * v);
      }
    }

    if (grad) {
      InputTrajectory dyn_grad(np, nc);
      detail::rollout_adjoint(xs, u, references, payload, config.robot, config.dt, state_grad, dyn_grad);
      grad->setZero(num_variables());
      for (int k = 0; k < np; ++k) {
        for (int i = 0; i < nc; ++i) {
          const Vector6 xi = z.segment<6>(xi_index(k, i));
          const Matrix3& r = references.orientations[i];
          const Vector6 w_bar = dyn_grad.wrench[k][i] + wrench_grad.wrench[k][i];
          Vector6 local_bar;
          local_bar << r.transpose() * w_bar.head<3>(), r.transpose() * w_bar.tail<3>();
          grad->segment<6>(xi_index(k, i)) =
              parametrize_jacobian(xi, config.surfaces[i]).transpose() * local_bar + weights.q_xi * xi;
          grad->segment<3>(velocity_index(k, i)) =
              dyn_grad.velocity[k][i] + weights.q_v * z.segment<3>(velocity_index(k, i));
        }
      }
    }
    if (breakdown) {
      *breakdown = cost;
    }
    return cost.total();
  }
};

static_assert(NlpProblem<HorizonProblem> && ProvidesCurvature<HorizonProblem>);

/// Assemble and validate an MPC instance.
[[nodiscard]] inline HorizonProblem build_mpc_problem(const CentroidalState& state,
                                                      const HorizonReferences& refs,
                                                      const PayloadDisturbance& payload_estimate,
                                                      const Weights& weights, const MpcConfig& config) {
  config.validate();
  weights.validate();
  refs.validate(config.horizon, config.num_contacts());
  if (state.contact_positions.size() != static_cast<std::size_t>(config.num_contacts())) {
    throw ConfigurationError("initial state has " + std::to_string(state.contact_positions.size()) +
                             " contacts, configuration has " + std::to_string(config.num_contacts()));
  }
  if (!state.is_finite() || !payload_estimate.is_finite()) {
    throw ConfigurationError("initial state and payload estimate must be finite");
  }
  HorizonProblem p;
  p.initial_state = state;
  p.references = refs;
  p.payload = hold_payload_over_horizon(payload_estimate, config.horizon);
  p.weights = weights;
  p.config = config;
  return p;
}

/// Primal-dual starting point of a solve.
struct WarmStart {
  Eigen::VectorXd decision;
  Eigen::VectorXd multipliers;
};

/**
 * Shift a per-step structured vector one step earlier, duplicating the last
 * block. `block` is the number of entries per step.
 */
[[nodiscard]] inline Eigen::VectorXd shift_blocks(const Eigen::VectorXd& v, Eigen::Index block) {
  if (block == 0 || v.size() < block) {
    return v;
  }
  Eigen::VectorXd out(v.size());
  const Eigen::Index n = v.size();
  out.head(n - block) = v.tail(n - block);
  out.tail(block) = v.tail(block);
  return out;
}

/// Cold start: gravity share m g / N_k inverted per active contact, zero velocity.
[[nodiscard]] inline WarmStart initial_warm_start(const HorizonProblem& p) {
  WarmStart ws;
  ws.decision = Eigen::VectorXd::Zero(p.num_variables());
  ws.multipliers = Eigen::VectorXd::Zero(p.num_constraints());
  const auto& robot = p.config.robot;
  for (int k = 0; k < p.horizon(); ++k) {
    std::size_t active = 0;
    for (int i = 0; i < p.num_contacts(); ++i) {
      active += p.references.gait[i][k] ? 1 : 0;
    }
    if (active == 0) {
      continue;
    }
    const Vector6 share = robot.mass * robot.gravity_vector / static_cast<double>(active);
    for (int i = 0; i < p.num_contacts(); ++i) {
      if (!p.references.gait[i][k]) {
        continue;
      }
      const Matrix3& r = p.references.orientations[i];
      const Wrench local{r.transpose() * share.head<3>(), r.transpose() * share.tail<3>()};
      if (auto xi = try_invert_parametrization(local, p.config.surfaces[i])) {
        ws.decision.segment<6>(p.xi_index(k, i)) = *xi;
      }
    }
  }
  return ws;
}

/// The applied part of the optimal input sequence.
struct FirstInput {
  std::vector<Vector6> xi;
  std::vector<Wrench> wrenches; ///< phi(xi), contact frame
  std::vector<Vector3> velocities;
};

/// Raised when the NLP solver fails; carries the last iterate.
class SolverFailure : public std::runtime_error {
public:
  SolverFailure(const std::string& what, SolverResult result)
      : std::runtime_error(what), result_(std::move(result)) {}
  [[nodiscard]] const SolverResult& result() const { return result_; }

private:
  SolverResult result_;
};

struct RecedingHorizonOutput {
  FirstInput input;
  WarmStart next_warm_start;
  SolverResult stats;
  CostBreakdown costs;
};

[[nodiscard]] inline FirstInput first_input(const HorizonProblem& p, const Eigen::VectorXd& z) {
  FirstInput u;
  for (int i = 0; i < p.num_contacts(); ++i) {
    const Vector6 xi = z.segment<6>(p.xi_index(0, i));
    u.xi.push_back(xi);
    u.wrenches.push_back(Wrench::from(parametrize(xi, p.config.surfaces[i])));
    u.velocities.push_back(z.segment<3>(p.velocity_index(0, i)));
  }
  return u;
}

/**
 * @brief Solve one MPC instance and return the first input, mapped through
 * phi, with the solution shifted by one step as the next warm start.
 *
 * A missing warm start means initial_warm_start(). Non-converged solves that
 * exhaust the iteration budget still return the best iterate (status in
 * `stats`); a line-search breakdown throws SolverFailure.
 */
[[nodiscard]] inline RecedingHorizonOutput receding_horizon_step(const HorizonProblem& p,
                                                                 const std::optional<WarmStart>& warm = std::nullopt) {
  WarmStart start = warm && warm->decision.size() == p.num_variables() ? *warm : initial_warm_start(p);
  SolverResult result = solve(p, start.decision, p.config.solver, start.multipliers);
  if (result.status == SolverStatus::LineSearchFailure) {
    throw SolverFailure("parametrized MPC: line search failed", std::move(result));
  }
  RecedingHorizonOutput out;
  out.input = first_input(p, result.x);
  out.costs = p.costs(result.x);
  out.next_warm_start.decision = shift_blocks(result.x, p.step_size());
  out.next_warm_start.multipliers = shift_blocks(result.multipliers, p.constraints_per_step());
  out.stats = std::move(result);
  return out;
}

} // namespace pmpc
