/**
 * @file baseline.hpp
 * @brief Comparison controller with raw contact wrenches as decision
 * variables and contact stability imposed through explicit inequalities.
 *
 * Decision layout per step k matches HorizonProblem, with the contact-frame
 * wrench w_i(k) in place of xi_i(k). Constraints are ordered as
 *   [stability residuals of every active (k, i), k-major | footstep bounds]
 * with five smooth residuals per active contact-step:
 *   Fz - fz_min
 *   mu^2 Fz^2 - Fx^2 - Fy^2
 *   (Mx - y_min Fz)(y_max Fz - Mx)
 *   (-My - x_min Fz)(x_max Fz + My)
 *   mu_z^2 Fz^2 - Mz^2
 * The payload task is replaced by a force-similarity term between active
 * feet plus a small regularizer pulling each active wrench toward its share
 * m g / N of the robot weight (inactive wrenches toward zero).
 */
#pragma once

#include "pmpc/mpc.hpp"

#include <array>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace pmpc {

inline constexpr int kStabilityResidualsPerContact = 5;

/// Smooth stability residuals of a contact-frame wrench (all >= 0 iff stable, given Fz > 0).
[[nodiscard]] inline std::array<double, 5> stability_residuals(const Vector6& w, const ContactSurface& s) {
  const double fx = w(0), fy = w(1), fz = w(2), mx = w(3), my = w(4), mz = w(5);
  return {fz - s.fz_min,
          s.mu_c * s.mu_c * fz * fz - fx * fx - fy * fy,
          (mx - s.y_min * fz) * (s.y_max * fz - mx),
          (-my - s.x_min * fz) * (s.x_max * fz + my),
          s.mu_z * s.mu_z * fz * fz - mz * mz};
}

/// Rows of d residuals / d w, as returned by stability_residuals().
[[nodiscard]] inline Eigen::Matrix<double, 5, 6> stability_residual_jacobian(const Vector6& w,
                                                                            const ContactSurface& s) {
  const double fx = w(0), fy = w(1), fz = w(2), mx = w(3), my = w(4), mz = w(5);
  Eigen::Matrix<double, 5, 6> j = Eigen::Matrix<double, 5, 6>::Zero();
  j(0, 2) = 1.0;
  j(1, 0) = -2.0 * fx;
  j(1, 1) = -2.0 * fy;
  j(1, 2) = 2.0 * s.mu_c * s.mu_c * fz;
  {
    const double a = mx - s.y_min * fz, b = s.y_max * fz - mx;
    j(2, 3) = b - a;
    j(2, 2) = -s.y_min * b + s.y_max * a;
  }
  {
    const double a = -my - s.x_min * fz, b = s.x_max * fz + my;
    j(3, 4) = -b + a;
    j(3, 2) = -s.x_min * b + s.x_max * a;
  }
  j(4, 2) = 2.0 * s.mu_z * s.mu_z * fz;
  j(4, 5) = -2.0 * mz;
  return j;
}

class BaselineProblem {
public:
  CentroidalState initial_state;
  HorizonReferences references;
  std::vector<PayloadDisturbance> payload;
  Weights weights;
  MpcConfig config;

  [[nodiscard]] int horizon() const { return config.horizon; }
  [[nodiscard]] int num_contacts() const { return config.num_contacts(); }
  [[nodiscard]] Eigen::Index step_size() const { return 9 * num_contacts(); }
  [[nodiscard]] Eigen::Index num_variables() const { return horizon() * step_size(); }
  [[nodiscard]] Eigen::Index wrench_index(int k, int i) const { return k * step_size() + 6 * i; }
  [[nodiscard]] Eigen::Index velocity_index(int k, int i) const {
    return k * step_size() + 6 * num_contacts() + 3 * i;
  }

  [[nodiscard]] Eigen::Index footstep_constraints_per_step() const {
    return num_contacts() * (config.bound_mode == FootstepBoundMode::Box ? 6 : 1);
  }
  /// Number of inequalities attached to horizon step k.
  [[nodiscard]] Eigen::Index constraints_at_step(int k) const {
    Eigen::Index n = footstep_constraints_per_step();
    for (int i = 0; i < num_contacts(); ++i) {
      n += references.gait[i][k] ? kStabilityResidualsPerContact : 0;
    }
    return n;
  }
  [[nodiscard]] Eigen::Index num_stability_constraints() const {
    Eigen::Index n = 0;
    for (int k = 0; k < horizon(); ++k) {
      for (int i = 0; i < num_contacts(); ++i) {
        n += references.gait[i][k] ? kStabilityResidualsPerContact : 0;
      }
    }
    return n;
  }
  [[nodiscard]] Eigen::Index num_constraints() const {
    return num_stability_constraints() + horizon() * footstep_constraints_per_step();
  }

  /// (k, i) of every stability block, in constraint order.
  [[nodiscard]] std::vector<std::pair<int, int>> stability_blocks() const {
    std::vector<std::pair<int, int>> out;
    for (int k = 0; k < horizon(); ++k) {
      for (int i = 0; i < num_contacts(); ++i) {
        if (references.gait[i][k]) {
          out.emplace_back(k, i);
        }
      }
    }
    return out;
  }

  [[nodiscard]] Vector6 local_wrench(const Eigen::VectorXd& z, int k, int i) const {
    return z.segment<6>(wrench_index(k, i));
  }

  [[nodiscard]] InputTrajectory inputs(const Eigen::VectorXd& z) const {
    InputTrajectory u(horizon(), num_contacts());
    for (int k = 0; k < horizon(); ++k) {
      for (int i = 0; i < num_contacts(); ++i) {
        const Vector6 w = local_wrench(z, k, i);
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
    Eigen::VectorXd g(num_constraints());
    Eigen::Index row = 0;
    for (const auto& [k, i] : stability_blocks()) {
      const auto r = stability_residuals(local_wrench(z, k, i), config.surfaces[i]);
      for (double v : r) {
        g(row++) = v;
      }
    }
    g.tail(g.size() - row) = footstep_bound_residuals(rollout(z), references, config);
    return g;
  }

  [[nodiscard]] Eigen::VectorXd constraint_vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& mu) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(num_variables());
    Eigen::Index row = 0;
    for (const auto& [k, i] : stability_blocks()) {
      const auto j = stability_residual_jacobian(local_wrench(z, k, i), config.surfaces[i]);
      out.segment<6>(wrench_index(k, i)) += j.transpose() * mu.segment<5>(row);
      row += kStabilityResidualsPerContact;
    }
    const auto v_bar =
        detail::footstep_bound_vjp(rollout(z), references, config, mu.tail(mu.size() - row));
    for (int k = 0; k < horizon(); ++k) {
      for (int i = 0; i < num_contacts(); ++i) {
        out.segment<3>(velocity_index(k, i)) += v_bar[k][i];
      }
    }
    return out;
  }

  /// Gauss-Newton curvature of f + 1/2 sum_r w_r g_r^2 (used as preconditioner).
  [[nodiscard]] Eigen::MatrixXd curvature(const Eigen::VectorXd& z, const Eigen::VectorXd& constraint_weights) const {
    const int np = horizon();
    const int nc = num_contacts();
    const InputTrajectory u = inputs(z);
    const auto xs = detail::rollout(initial_state, u, references, payload, config.robot, config.dt);
    Eigen::MatrixXd h =
        detail::tracking_gauss_newton(xs, u, references, payload, config.robot, config.dt, weights);
    std::vector<Matrix6> rot(static_cast<std::size_t>(nc), Matrix6::Zero());
    for (int i = 0; i < nc; ++i) {
      rot[i].block<3, 3>(0, 0) = references.orientations[i];
      rot[i].block<3, 3>(3, 3) = references.orientations[i];
    }
    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        const Eigen::Index b = wrench_index(k, i);
        h.middleRows<6>(b) = (rot[i].transpose() * h.middleRows<6>(b)).eval();
      }
    }
    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        const Eigen::Index b = wrench_index(k, i);
        h.middleCols<6>(b) = (h.middleCols<6>(b) * rot[i]).eval();
      }
    }
    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        const Eigen::Index b = wrench_index(k, i);
        h.block<6, 6>(b, b).diagonal().array() += weights.wrench_regularization;
        h.block<3, 3>(velocity_index(k, i), velocity_index(k, i)) += weights.q_v;
        if (!references.gait[i][k]) {
          continue;
        }
        for (int j = i + 1; j < nc; ++j) {
          if (!references.gait[j][k]) {
            continue;
          }
          const Eigen::Index c = wrench_index(k, j);
          h.block<6, 6>(b, b) += rot[i].transpose() * weights.q_d * rot[i];
          h.block<6, 6>(c, c) += rot[j].transpose() * weights.q_d * rot[j];
          const Matrix6 cross = rot[i].transpose() * weights.q_d * rot[j];
          h.block<6, 6>(b, c) -= cross;
          h.block<6, 6>(c, b) -= cross.transpose();
        }
      }
    }
    Eigen::Index row = 0;
    for (const auto& [k, i] : stability_blocks()) {
      const auto j = stability_residual_jacobian(local_wrench(z, k, i), config.surfaces[i]);
      const Eigen::Index b = wrench_index(k, i);
      h.block<6, 6>(b, b) += j.transpose() * constraint_weights.segment<5>(row).asDiagonal() * j;
      row += kStabilityResidualsPerContact;
    }
    detail::add_footstep_bound_curvature(xs, references, config, constraint_weights, row,
                                         [this](int k, int i) { return velocity_index(k, i); }, h);
    return h;
  }

  /// Contact-frame gravity share of an active contact at step k, zero otherwise.
  [[nodiscard]] Vector6 regularization_target(int k, int i) const {
    Vector6 t = Vector6::Zero();
    if (!references.gait[i][k]) {
      return t;
    }
    int active = 0;
    for (int j = 0; j < num_contacts(); ++j) {
      active += references.gait[j][k] ? 1 : 0;
    }
    t.head<3>() = references.orientations[i].transpose() * (config.robot.mass * config.robot.gravity_vector.head<3>()) /
                  static_cast<double>(active);
    return t;
  }

private:
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad, CostBreakdown* breakdown) const {
    const int np = horizon();
    const int nc = num_contacts();
    const InputTrajectory u = inputs(z);
    const auto xs = detail::rollout(initial_state, u, references, payload, config.robot, config.dt);

    CostBreakdown cost;
    std::vector<CentroidalState> state_grad;
    InputTrajectory wrench_grad(np, nc);
    if (grad) {
      state_grad.assign(np + 1, detail::zero_like(initial_state));
    }
    detail::add_tracking_terms(xs, references, weights, cost, grad ? &state_grad : nullptr);

    for (int k = 0; k < np; ++k) {
      for (int i = 0; i < nc; ++i) {
        if (!references.gait[i][k]) {
          continue;
        }
        for (int j = i + 1; j < nc; ++j) {
          if (!references.gait[j][k]) {
            continue;
          }
          const Vector6 r = u.wrench[k][i] - u.wrench[k][j];
          const Vector6 qr = weights.q_d * r;
          cost.payload += 0.5 * r.dot(qr);
          wrench_grad.wrench[k][i] += qr;
          wrench_grad.wrench[k][j] -= qr;
        }
      }
      for (int i = 0; i < nc; ++i) {
        const Vector6 w = local_wrench(z, k, i) - regularization_target(k, i);
        const Vector3 v = z.segment<3>(velocity_index(k, i));
        cost.parameter += 0.5 * weights.wrench_regularization * w.squaredNorm();
        cost.velocity += 0.5 * v.dot(weights.q_v * v);
      }
    }

    if (grad) {
      InputTrajectory dyn_grad(np, nc);
      detail::rollout_adjoint(xs, u, references, payload, config.robot, config.dt, state_grad, dyn_grad);
      grad->setZero(num_variables());
      for (int k = 0; k < np; ++k) {
        for (int i = 0; i < nc; ++i) {
          const Matrix3& r = references.orientations[i];
          const Vector6 w_bar = dyn_grad.wrench[k][i] + wrench_grad.wrench[k][i];
          grad->segment<3>(wrench_index(k, i)) = r.transpose() * w_bar.head<3>();
          grad->segment<3>(wrench_index(k, i) + 3) = r.transpose() * w_bar.tail<3>();
          grad->segment<6>(wrench_index(k, i)) +=
              weights.wrench_regularization * (local_wrench(z, k, i) - regularization_target(k, i));
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

static_assert(NlpProblem<BaselineProblem> && ProvidesCurvature<BaselineProblem>);

[[nodiscard]] inline BaselineProblem build_constrained_mpc(const CentroidalState& state,
                                                           const HorizonReferences& refs,
                                                           const PayloadDisturbance& payload_estimate,
                                                           const Weights& weights, const MpcConfig& config) {
  // identical validation path
  const HorizonProblem checked = build_mpc_problem(state, refs, payload_estimate, weights, config);
  BaselineProblem p;
  p.initial_state = checked.initial_state;
  p.references = checked.references;
  p.payload = checked.payload;
  p.weights = checked.weights;
  p.config = checked.config;
  return p;
}

/// Gravity share m g / N_k on each active contact (contact frame), zero velocity.
[[nodiscard]] inline WarmStart initial_warm_start(const BaselineProblem& p) {
  WarmStart ws;
  ws.decision = Eigen::VectorXd::Zero(p.num_variables());
  ws.multipliers = Eigen::VectorXd::Zero(p.num_constraints());
  const auto& robot = p.config.robot;
  for (int k = 0; k < p.horizon(); ++k) {
    int active = 0;
    for (int i = 0; i < p.num_contacts(); ++i) {
      active += p.references.gait[i][k] ? 1 : 0;
    }
    if (active == 0) {
      continue;
    }
    const Vector6 share = robot.mass * robot.gravity_vector / active;
    for (int i = 0; i < p.num_contacts(); ++i) {
      if (p.references.gait[i][k]) {
        const Matrix3& r = p.references.orientations[i];
        ws.decision.segment<3>(p.wrench_index(k, i)) = r.transpose() * share.head<3>();
        ws.decision.segment<3>(p.wrench_index(k, i) + 3) = r.transpose() * share.tail<3>();
      }
    }
  }
  return ws;
}

/**
 * Carry multipliers of the previous solve (problem `prev`) into `next`,
 * shifted one step earlier. Stability blocks are matched by (k, contact):
 * block (k + 1, i) of `prev` seeds (k, i) of `next` when both exist; the
 * last step repeats the previous last step where possible.
 */
[[nodiscard]] inline Eigen::VectorXd shift_baseline_multipliers(const BaselineProblem& prev,
                                                                const Eigen::VectorXd& mu,
                                                                const BaselineProblem& next) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(next.num_constraints());
  if (mu.size() != prev.num_constraints()) {
    return out;
  }
  std::map<std::pair<int, int>, Eigen::Index> prev_rows;
  Eigen::Index row = 0;
  for (const auto& key : prev.stability_blocks()) {
    prev_rows[key] = row;
    row += kStabilityResidualsPerContact;
  }
  const Eigen::Index prev_stab = row;
  const int np = next.horizon();
  row = 0;
  for (const auto& [k, i] : next.stability_blocks()) {
    const int source = std::min(k + 1, prev.horizon() - 1);
    if (auto it = prev_rows.find({source, i}); it != prev_rows.end()) {
      out.segment<5>(row) = mu.segment<5>(it->second);
    }
    row += kStabilityResidualsPerContact;
  }
  const Eigen::Index per = next.footstep_constraints_per_step();
  out.tail(np * per) = shift_blocks(mu.tail(mu.size() - prev_stab), per);
  return out;
}

struct BaselineOutput {
  std::vector<Wrench> wrenches; ///< contact frame
  std::vector<Vector3> velocities;
  WarmStart next_warm_start; ///< decision shifted; multipliers as returned (unshifted)
  SolverResult stats;
  CostBreakdown costs;
};

/**
 * Solve one baseline instance. `warm` is used as given (shift the
 * multipliers with shift_baseline_multipliers() beforehand).
 */
[[nodiscard]] inline BaselineOutput baseline_receding_step(const BaselineProblem& p,
                                                           const std::optional<WarmStart>& warm = std::nullopt) {
  WarmStart start = warm && warm->decision.size() == p.num_variables() ? *warm : initial_warm_start(p);
  if (start.multipliers.size() != p.num_constraints()) {
    start.multipliers = Eigen::VectorXd::Zero(p.num_constraints());
  }
  SolverResult result = solve(p, start.decision, p.config.solver, start.multipliers);
  if (result.status == SolverStatus::LineSearchFailure) {
    throw SolverFailure("constrained baseline: line search failed", std::move(result));
  }
  BaselineOutput out;
  for (int i = 0; i < p.num_contacts(); ++i) {
    out.wrenches.push_back(Wrench::from(p.local_wrench(result.x, 0, i)));
    out.velocities.push_back(result.x.segment<3>(p.velocity_index(0, i)));
  }
  out.costs = p.costs(result.x);
  out.next_warm_start.decision = shift_blocks(result.x, p.step_size());
  out.next_warm_start.multipliers = result.multipliers;
  out.stats = std::move(result);
  return out;
}

} // namespace pmpc
