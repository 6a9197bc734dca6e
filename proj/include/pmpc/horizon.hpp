/**
 * @file horizon.hpp
 * @brief Discrete-time horizon ingredients shared by the parametrized MPC and
 * the constrained baseline: configuration, references, the Euler rollout and
 * its reverse-mode adjoint, and the payload compensation target.
 */
#pragma once

#include "pmpc/centroidal.hpp"
#include "pmpc/solver.hpp"

#include <span>
#include <string>
#include <vector>

namespace pmpc {

/// Penalty weights (all symmetric positive semidefinite).
struct Weights {
  Matrix3 q_h = 100.0 * Matrix3::Identity();
  Matrix3 q_c = Vector3(1.0, 1.0, 1000.0).asDiagonal();
  Matrix3 q_pc = 200.0 * Matrix3::Identity();
  Matrix6 q_d = (Vector6() << 100.0, 100.0, 100.0, 10.0, 10.0, 10.0).finished().asDiagonal();
  Matrix6 q_xi = 10.0 * Matrix6::Identity();
  Matrix3 q_v = 0.01 * Matrix3::Identity();
  /// Enables the payload attenuation / gravity compensation task.
  bool payload_task = true;
  /// Baseline only: weight of the pull of raw wrenches toward their gravity share.
  double wrench_regularization = 0.1;

  void validate() const {
    auto check = [](const auto& q, const char* name) {
      if (!q.allFinite() || (q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
          q.template selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() < -1e-12) {
        throw ConfigurationError(std::string("weights: ") + name + " must be symmetric PSD");
      }
    };
    check(q_h, "q_h");
    check(q_c, "q_c");
    check(q_pc, "q_pc");
    check(q_d, "q_d");
    check(q_xi, "q_xi");
    check(q_v, "q_v");
    if (!(wrench_regularization >= 0.0)) {
      throw ConfigurationError("weights: wrench_regularization must be >= 0");
    }
  }
};

enum class FootstepBoundMode {
  Box,  ///< lb <= R^T (p - p_ref) <= ub per axis
  Norm, ///< |R^T (p - p_ref)| <= norm_bound
};

struct MpcConfig {
  int horizon = 10;  ///< n_p
  double dt = 0.2;   ///< [s]
  Vector3 footstep_lb = Vector3(-0.05, -0.05, -0.001);
  Vector3 footstep_ub = Vector3(0.05, 0.05, 0.001);
  FootstepBoundMode bound_mode = FootstepBoundMode::Box;
  double norm_bound = 0.05;
  RobotConstants robot{};
  std::vector<ContactSurface> surfaces{ContactSurface{}, ContactSurface{}};
  SolverOptions solver{};

  [[nodiscard]] int num_contacts() const { return static_cast<int>(surfaces.size()); }

  void validate() const {
    if (horizon < 1) {
      throw ConfigurationError("mpc: horizon must be >= 1");
    }
    if (!(dt > 0.0)) {
      throw ConfigurationError("mpc: dt must be > 0");
    }
    if (!((footstep_lb.array() <= 0.0).all() && (footstep_ub.array() >= 0.0).all())) {
      throw ConfigurationError("mpc: footstep bounds must satisfy lb <= 0 <= ub");
    }
    if (!(norm_bound >= 0.0)) {
      throw ConfigurationError("mpc: norm_bound must be >= 0");
    }
    if (surfaces.empty()) {
      throw ConfigurationError("mpc: at least one contact surface is required");
    }
    robot.validate();
    for (const auto& s : surfaces) {
      s.validate();
    }
    solver.validate();
  }
};

/// References over one horizon window (n_p + 1 samples each).
struct HorizonReferences {
  std::vector<Vector3> com;
  std::vector<std::vector<Vector3>> footsteps; ///< [contact][k]
  std::vector<std::vector<bool>> gait;         ///< [contact][k], true = in contact
  std::vector<Matrix3> orientations;           ///< per contact

  void validate(int horizon, int contacts) const {
    const auto samples = static_cast<std::size_t>(horizon + 1);
    const auto nc = static_cast<std::size_t>(contacts);
    if (com.size() != samples) {
      throw ConfigurationError("references: com needs " + std::to_string(samples) + " samples");
    }
    if (footsteps.size() != nc || gait.size() != nc || orientations.size() != nc) {
      throw ConfigurationError("references: per-contact lists must have " + std::to_string(nc) +
                               " entries");
    }
    for (std::size_t i = 0; i < nc; ++i) {
      if (footsteps[i].size() != samples || gait[i].size() != samples) {
        throw ConfigurationError("references: contact " + std::to_string(i) + " needs " +
                                 std::to_string(samples) + " samples");
      }
      if (!is_rotation(orientations[i])) {
        throw ConfigurationError("references: contact orientation is not a rotation");
      }
    }
  }

  [[nodiscard]] ContactConfiguration contacts_at(std::size_t k,
                                                 std::span<const ContactSurface> surfaces) const {
    ContactConfiguration cfg;
    for (std::size_t i = 0; i < gait.size(); ++i) {
      cfg.contacts.push_back(Contact{orientations[i], gait[i][k], surfaces[i]});
    }
    return cfg;
  }
};

/// Per-task objective values.
struct CostBreakdown {
  double centroidal = 0.0; ///< T_h
  double footstep = 0.0;   ///< T_Pc
  double payload = 0.0;    ///< T_d (baseline: force similarity)
  double parameter = 0.0;  ///< T_xi (baseline: wrench regularization)
  double velocity = 0.0;   ///< swing velocity regularization

  [[nodiscard]] double total() const { return centroidal + footstep + payload + parameter + velocity; }
};

/// Zero-order hold of the payload estimate (wrenches and points) over the horizon.
[[nodiscard]] inline std::vector<PayloadDisturbance> hold_payload_over_horizon(const PayloadDisturbance& estimate,
                                                                               int horizon) {
  if (horizon < 1) {
    throw ConfigurationError("hold_payload_over_horizon: horizon must be >= 1");
  }
  return std::vector<PayloadDisturbance>(static_cast<std::size_t>(horizon), estimate);
}

/// Inertial-frame inputs over the horizon, indexed [k][contact].
struct InputTrajectory {
  std::vector<std::vector<Vector6>> wrench;
  std::vector<std::vector<Vector3>> velocity;

  InputTrajectory() = default;
  InputTrajectory(std::size_t steps, std::size_t contacts)
      : wrench(steps, std::vector<Vector6>(contacts, Vector6::Zero())),
        velocity(steps, std::vector<Vector3>(contacts, Vector3::Zero())) {}
};

namespace detail {

inline CentroidalState zero_like(const CentroidalState& x) {
  CentroidalState z;
  z.contact_positions.assign(x.contact_positions.size(), Vector3::Zero());
  return z;
}

/// Euler rollout; states[0] = x0, states.size() = steps + 1.
inline std::vector<CentroidalState> rollout(const CentroidalState& x0, const InputTrajectory& u,
                                            const HorizonReferences& refs,
                                            std::span<const PayloadDisturbance> payload,
                                            const RobotConstants& robot, double dt) {
  const std::size_t steps = u.wrench.size();
  const std::size_t nc = x0.contact_positions.size();
  std::vector<CentroidalState> xs;
  xs.reserve(steps + 1);
  xs.push_back(x0);
  for (std::size_t k = 0; k < steps; ++k) {
    const CentroidalState& x = xs.back();
    CentroidalState next = x;
    Vector6 hdot = payload_wrench_at_com(payload[k], x.com_position) - robot.mass * robot.gravity_vector;
    for (std::size_t i = 0; i < nc; ++i) {
      if (refs.gait[i][k]) {
        const Vector6& w = u.wrench[k][i];
        hdot.head<3>() += w.head<3>();
        hdot.tail<3>() += (x.contact_positions[i] - x.com_position).cross(w.head<3>()) + w.tail<3>();
      } else {
        next.contact_positions[i] += dt * u.velocity[k][i];
      }
    }
    next.com_position += dt * x.momentum.head<3>() / robot.mass;
    next.momentum += dt * hdot;
    xs.push_back(std::move(next));
  }
  return xs;
}

/**
 * Reverse sweep through the rollout. `state_grad[k]` holds the explicit
 * gradient of the cost w.r.t. X_k; on return `input_grad` receives the
 * gradient w.r.t. every inertial wrench and velocity through the dynamics.
 */
inline void rollout_adjoint(const std::vector<CentroidalState>& xs, const InputTrajectory& u,
                            const HorizonReferences& refs, std::span<const PayloadDisturbance> payload,
                            const RobotConstants& robot, double dt,
                            const std::vector<CentroidalState>& state_grad, InputTrajectory& input_grad) {
  const std::size_t steps = u.wrench.size();
  const std::size_t nc = xs.front().contact_positions.size();
  CentroidalState lam = state_grad[steps];
  for (std::size_t k = steps; k-- > 0;) {
    const CentroidalState& x = xs[k];
    const Vector3 lam_l = lam.momentum.head<3>();
    const Vector3 lam_a = lam.momentum.tail<3>();
    CentroidalState prev = lam;
    Vector3 force_sum = payload[k].left_wrench.force + payload[k].right_wrench.force;
    for (std::size_t i = 0; i < nc; ++i) {
      if (refs.gait[i][k]) {
        const Vector3 f = u.wrench[k][i].head<3>();
        input_grad.wrench[k][i].head<3>() = dt * (lam_l + lam_a.cross(x.contact_positions[i] - x.com_position));
        input_grad.wrench[k][i].tail<3>() = dt * lam_a;
        input_grad.velocity[k][i].setZero();
        force_sum += f;
        prev.contact_positions[i] += dt * f.cross(lam_a);
      } else {
        input_grad.wrench[k][i].setZero();
        input_grad.velocity[k][i] = dt * lam.contact_positions[i];
      }
    }
    prev.com_position += dt * lam_a.cross(force_sum);
    prev.momentum.head<3>() += dt / robot.mass * lam.com_position;

    prev.com_position += state_grad[k].com_position;
    prev.momentum += state_grad[k].momentum;
    for (std::size_t i = 0; i < nc; ++i) {
      prev.contact_positions[i] += state_grad[k].contact_positions[i];
    }
    lam = std::move(prev);
  }
}

/// Wrench-transport matrices of the active contacts and the 6x6 Gram matrix A_f A_f^T.
struct CompensationSystem {
  std::vector<Matrix6> transport;
  Eigen::LDLT<Matrix6> gram;

  CompensationSystem(std::span<const Vector3> active_points, const Vector3& com) {
    Matrix6 g = Matrix6::Zero();
    for (const auto& p : active_points) {
      transport.push_back(wrench_transport_map(p, com));
      g += transport.back() * transport.back().transpose();
    }
    gram.compute(g);
  }
};

} // namespace detail

/**
 * @brief Per-active-contact wrench targets of the payload attenuation task:
 * A_f^+ (-A_d d) + m g / N for each of the N active contacts.
 *
 * A_f = (A_1 ... A_N) is 6 x 6N with full row rank, so its Moore-Penrose
 * inverse is A_f^T (A_f A_f^T)^{-1}.
 */
[[nodiscard]] inline std::vector<Vector6> compensation_targets(std::span<const Vector3> active_points,
                                                               const Vector3& com,
                                                               const PayloadDisturbance& payload,
                                                               const RobotConstants& robot) {
  if (active_points.empty()) {
    throw InfeasiblePhaseError("payload attenuation task needs at least one active contact");
  }
  const detail::CompensationSystem sys(active_points, com);
  const Vector6 b = -detail::payload_wrench_at_com(payload, com);
  const Vector6 y = sys.gram.solve(b);
  const Vector6 share = robot.mass * robot.gravity_vector / static_cast<double>(active_points.size());
  std::vector<Vector6> out;
  out.reserve(active_points.size());
  for (const auto& a : sys.transport) {
    out.push_back(a.transpose() * y + share);
  }
  return out;
}

namespace detail {

/// Gradient of <target_grad, compensation_targets(points, com)> w.r.t. com and points.
inline void compensation_targets_vjp(std::span<const Vector3> active_points, const Vector3& com,
                                     const PayloadDisturbance& payload,
                                     std::span<const Vector6> target_grad, Vector3& com_grad,
                                     std::span<Vector3> point_grad) {
  const CompensationSystem sys(active_points, com);
  const Vector6 b = -payload_wrench_at_com(payload, com);
  const Vector6 y = sys.gram.solve(b);

  Vector6 y_bar = Vector6::Zero();
  for (std::size_t i = 0; i < sys.transport.size(); ++i) {
    y_bar += sys.transport[i] * target_grad[i];
  }
  const Vector6 q = sys.gram.solve(y_bar); // = b_bar
  const Matrix6 gram_bar = -q * y.transpose();
  const Matrix6 gram_bar_sym = gram_bar + gram_bar.transpose();

  for (std::size_t i = 0; i < sys.transport.size(); ++i) {
    const Matrix6 a_bar = y * target_grad[i].transpose() + gram_bar_sym * sys.transport[i];
    const Vector3 r_bar = skew_adjoint(a_bar.block<3, 3>(3, 0));
    point_grad[i] += r_bar;
    com_grad -= r_bar;
  }
  // b = -A_d d; its moment rows depend on com through (P_j - com) x F_j
  const Vector3 payload_force = payload.left_wrench.force + payload.right_wrench.force;
  com_grad += payload_force.cross(q.tail<3>());
}

/// Explicit per-state tracking gradients (T_h, T_Pc) and their values.
inline void add_tracking_terms(const std::vector<CentroidalState>& xs, const HorizonReferences& refs,
                               const Weights& w, CostBreakdown& cost,
                               std::vector<CentroidalState>* grad) {
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Vector3 ha = xs[k].momentum.tail<3>();
    const Vector3 ec = xs[k].com_position - refs.com[k];
    cost.centroidal += 0.5 * ha.dot(w.q_h * ha) + 0.5 * ec.dot(w.q_c * ec);
    if (grad) {
      (*grad)[k].momentum.tail<3>() += w.q_h * ha;
      (*grad)[k].com_position += w.q_c * ec;
    }
    for (std::size_t i = 0; i < xs[k].contact_positions.size(); ++i) {
      const Vector3 ep = xs[k].contact_positions[i] - refs.footsteps[i][k];
      cost.footstep += 0.5 * ep.dot(w.q_pc * ep);
      if (grad) {
        (*grad)[k].contact_positions[i] += w.q_pc * ep;
      }
    }
  }
}

} // namespace detail

namespace detail {

/**
 * Gauss-Newton curvature of the tracking terms (T_h, T_Pc) with respect to
 * the inertial inputs, ordered per step k as
 *   [wrench_0 ... wrench_{nc-1} (6 each) | v_0 ... v_{nc-1} (3 each)].
 * State sensitivities are propagated through the linearized Euler step;
 * the linear momentum carries no weight.
 */
inline Eigen::MatrixXd tracking_gauss_newton(const std::vector<CentroidalState>& xs, const InputTrajectory& u,
                                             const HorizonReferences& refs,
                                             std::span<const PayloadDisturbance> payload,
                                             const RobotConstants& robot, double dt, const Weights& w) {
  const int steps = static_cast<int>(u.wrench.size());
  const int nc = static_cast<int>(xs.front().contact_positions.size());
  const int step = 9 * nc;
  const int n = steps * step;
  const int dim = 9 + 3 * nc; // c, l, a, p_0 ...
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(dim, n);
  Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(dim, dim);
  weight.block<3, 3>(0, 0) = w.q_c;
  weight.block<3, 3>(6, 6) = w.q_h;
  for (int i = 0; i < nc; ++i) {
    weight.block<3, 3>(9 + 3 * i, 9 + 3 * i) = w.q_pc;
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd a(dim, dim);
  for (int k = 0; k < steps; ++k) {
    const CentroidalState& x = xs[k];
    const int cols = k * step;
    a.setIdentity();
    a.block<3, 3>(0, 3) = dt / robot.mass * Matrix3::Identity();
    Vector3 force_sum = payload[k].left_wrench.force + payload[k].right_wrench.force;
    for (int i = 0; i < nc; ++i) {
      if (refs.gait[i][k]) {
        const Vector3 f = u.wrench[k][i].head<3>();
        force_sum += f;
        a.block<3, 3>(6, 9 + 3 * i) = -dt * skew(f);
      }
    }
    a.block<3, 3>(6, 0) = dt * skew(force_sum);
    if (cols > 0) {
      sens.leftCols(cols) = (a * sens.leftCols(cols)).eval();
    }
    for (int i = 0; i < nc; ++i) {
      const int wc = cols + 6 * i;
      const int vc = cols + 6 * nc + 3 * i;
      if (refs.gait[i][k]) {
        sens.block<3, 3>(3, wc) = dt * Matrix3::Identity();
        sens.block<3, 3>(6, wc) = dt * skew(x.contact_positions[i] - x.com_position);
        sens.block<3, 3>(6, wc + 3) = dt * Matrix3::Identity();
      } else {
        sens.block<3, 3>(9 + 3 * i, vc) = dt * Matrix3::Identity();
      }
    }
    const int live = cols + step;
    const Eigen::MatrixXd ws = weight * sens.leftCols(live);
    h.topLeftCorner(live, live).noalias() += sens.leftCols(live).transpose() * ws;
  }
  return h;
}

/**
 * Gauss-Newton curvature of w-weighted squared footstep residuals with
 * respect to the contact velocities, added into `h` (decision layout with
 * velocity offset `vel(k, i)`).
 */
template <typename VelocityIndex>
void add_footstep_bound_curvature(const std::vector<CentroidalState>& states, const HorizonReferences& refs,
                                  const MpcConfig& config, const Eigen::VectorXd& weights,
                                  Eigen::Index first_row, const VelocityIndex& vel, Eigen::MatrixXd& h) {
  const int steps = static_cast<int>(states.size()) - 1;
  const int nc = static_cast<int>(refs.footsteps.size());
  Eigen::Index row = first_row;
  const double dt2 = config.dt * config.dt;
  for (int k = 1; k <= steps; ++k) {
    for (int i = 0; i < nc; ++i) {
      const Matrix3& r = refs.orientations[i];
      Matrix3 wk = Matrix3::Zero();
      if (config.bound_mode == FootstepBoundMode::Box) {
        for (int ax = 0; ax < 3; ++ax) {
          wk += (weights(row + ax) + weights(row + 3 + ax)) * r.col(ax) * r.col(ax).transpose();
        }
        row += 6;
      } else {
        const Vector3 e = r.transpose() * (states[k].contact_positions[i] - refs.footsteps[i][k]);
        const Vector3 g = 2.0 * (r * e);
        wk = weights(row++) * g * g.transpose();
      }
      if (wk.isZero(0.0)) {
        continue;
      }
      for (int j = 0; j < k; ++j) {
        if (refs.gait[i][j]) {
          continue;
        }
        for (int l = 0; l < k; ++l) {
          if (!refs.gait[i][l]) {
            h.block<3, 3>(vel(j, i), vel(l, i)) += dt2 * wk;
          }
        }
      }
    }
  }
}

} // namespace detail

/// T_h summed over the trajectory: angular momentum and CoM tracking.
[[nodiscard]] inline double tracking_cost(const std::vector<CentroidalState>& states,
                                          const HorizonReferences& refs, const Weights& w) {
  double c = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Vector3 ha = states[k].momentum.tail<3>();
    const Vector3 ec = states[k].com_position - refs.com[k];
    c += 0.5 * ha.dot(w.q_h * ha) + 0.5 * ec.dot(w.q_c * ec);
  }
  return c;
}

/// T_Pc summed over the trajectory and contacts.
[[nodiscard]] inline double footstep_cost(const std::vector<CentroidalState>& states,
                                          const HorizonReferences& refs, const Weights& w) {
  double c = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    for (std::size_t i = 0; i < states[k].contact_positions.size(); ++i) {
      const Vector3 e = states[k].contact_positions[i] - refs.footsteps[i][k];
      c += 0.5 * e.dot(w.q_pc * e);
    }
  }
  return c;
}

/// T_xi over an [k][contact] parameter trajectory.
[[nodiscard]] inline double parameter_regularization_cost(const std::vector<std::vector<Vector6>>& xi,
                                                          const Weights& w) {
  double c = 0.0;
  for (const auto& step : xi) {
    for (const auto& x : step) {
      c += 0.5 * x.dot(w.q_xi * x);
    }
  }
  return c;
}

/// Swing velocity regularization over an [k][contact] velocity trajectory.
[[nodiscard]] inline double velocity_regularization_cost(const std::vector<std::vector<Vector3>>& v,
                                                         const Weights& w) {
  double c = 0.0;
  for (const auto& step : v) {
    for (const auto& x : step) {
      c += 0.5 * x.dot(w.q_v * x);
    }
  }
  return c;
}

/**
 * @brief T_d over the horizon for inertial-frame foot wrenches [k][contact].
 *
 * Each step k < n_p compares the active contacts' wrenches with
 * compensation_targets() evaluated at the predicted state X_k.
 */
[[nodiscard]] inline double payload_attenuation_cost(const std::vector<std::vector<Vector6>>& wrenches,
                                                     const std::vector<CentroidalState>& states,
                                                     std::span<const PayloadDisturbance> payload,
                                                     const HorizonReferences& refs,
                                                     const RobotConstants& robot, const Weights& w) {
  double c = 0.0;
  for (std::size_t k = 0; k < wrenches.size(); ++k) {
    std::vector<Vector3> points;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < wrenches[k].size(); ++i) {
      if (refs.gait[i][k]) {
        points.push_back(states[k].contact_positions[i]);
        ids.push_back(i);
      }
    }
    const auto targets = compensation_targets(points, states[k].com_position, payload[k], robot);
    for (std::size_t a = 0; a < ids.size(); ++a) {
      const Vector6 r = wrenches[k][ids[a]] - targets[a];
      c += 0.5 * r.dot(w.q_d * r);
    }
  }
  return c;
}

/**
 * @brief Footstep bound residuals for states 1..n_p, positive = satisfied.
 *
 * Box mode: per contact-step, (e - lb, ub - e) with e = R^T (p - p_ref),
 * six scalars. Norm mode: one scalar norm_bound^2 - |e|^2.
 */
[[nodiscard]] inline Eigen::VectorXd footstep_bound_residuals(const std::vector<CentroidalState>& states,
                                                              const HorizonReferences& refs,
                                                              const MpcConfig& config) {
  const std::size_t nc = refs.footsteps.size();
  const std::size_t per = config.bound_mode == FootstepBoundMode::Box ? 6 : 1;
  Eigen::VectorXd r((states.size() - 1) * nc * per);
  Eigen::Index row = 0;
  for (std::size_t k = 1; k < states.size(); ++k) {
    for (std::size_t i = 0; i < nc; ++i) {
      const Vector3 e = refs.orientations[i].transpose() * (states[k].contact_positions[i] - refs.footsteps[i][k]);
      if (config.bound_mode == FootstepBoundMode::Box) {
        r.segment<3>(row) = e - config.footstep_lb;
        r.segment<3>(row + 3) = config.footstep_ub - e;
        row += 6;
      } else {
        r(row++) = config.norm_bound * config.norm_bound - e.squaredNorm();
      }
    }
  }
  return r;
}

namespace detail {

/// J^T mu of footstep_bound_residuals w.r.t. contact velocities [k][contact].
inline std::vector<std::vector<Vector3>> footstep_bound_vjp(const std::vector<CentroidalState>& states,
                                                           const HorizonReferences& refs,
                                                           const MpcConfig& config,
                                                           const Eigen::VectorXd& mu) {
  const std::size_t steps = states.size() - 1;
  const std::size_t nc = refs.footsteps.size();
  std::vector<std::vector<Vector3>> p_bar(steps + 1, std::vector<Vector3>(nc, Vector3::Zero()));
  Eigen::Index row = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    for (std::size_t i = 0; i < nc; ++i) {
      const Matrix3& r = refs.orientations[i];
      if (config.bound_mode == FootstepBoundMode::Box) {
        p_bar[k][i] = r * (mu.segment<3>(row) - mu.segment<3>(row + 3));
        row += 6;
      } else {
        const Vector3 e = r.transpose() * (states[k].contact_positions[i] - refs.footsteps[i][k]);
        p_bar[k][i] = -2.0 * mu(row++) * (r * e);
      }
    }
  }
  // p_{k} = p_0 + dt sum_{j<k} (1 - gamma_j) v_j
  std::vector<std::vector<Vector3>> v_bar(steps, std::vector<Vector3>(nc, Vector3::Zero()));
  for (std::size_t i = 0; i < nc; ++i) {
    Vector3 acc = Vector3::Zero();
    for (std::size_t k = steps; k-- > 0;) {
      acc += p_bar[k + 1][i];
      if (!refs.gait[i][k]) {
        v_bar[k][i] = config.dt * acc;
      }
    }
  }
  return v_bar;
}

/// Active contact indices at step k; throws during a flight phase.
inline std::vector<std::size_t> active_contacts(const HorizonReferences& refs, std::size_t k) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < refs.gait.size(); ++i) {
    if (refs.gait[i][k]) {
      ids.push_back(i);
    }
  }
  if (ids.empty()) {
    throw InfeasiblePhaseError("horizon step " + std::to_string(k) + " has no active contact");
  }
  return ids;
}

} // namespace detail

} // namespace pmpc
