/**
 * @file centroidal.hpp
 * @brief Centroidal momentum dynamics of a robot with planar foot contacts
 * and an external payload, plus its explicit Euler discretization.
 *
 * State x = (P_CoM, H, P_C) with H = (H_lin, H_ang) expressed at the CoM:
 *   d/dt P_CoM = H_lin / m
 *   d/dt H     = sum_{active i} A(P_Ci) w_i + sum_j A(P_dj) d_j - m g
 *   d/dt P_Ci  = (1 - gamma_i) v_Ci
 * where A(p) = [[I, 0], [skew(p - P_CoM), I]] transports a wrench applied at
 * p to the CoM.
 */
#pragma once

#include "pmpc/contact.hpp"
#include "pmpc/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace pmpc {

struct RobotConstants {
  double mass = 1.0; ///< [kg]
  /// Extended gravity vector (0, 0, g, 0, 0, 0); enters the dynamics as -m * g.
  Vector6 gravity_vector = (Vector6() << 0.0, 0.0, kGravity, 0.0, 0.0, 0.0).finished();

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw ConfigurationError("robot: mass must be > 0");
    }
    if (!gravity_vector.allFinite()) {
      throw ConfigurationError("robot: gravity vector must be finite");
    }
  }
};

/// One foot: orientation of its contact frame, activity flag and geometry.
struct Contact {
  Matrix3 orientation = Matrix3::Identity();
  bool active = true;
  ContactSurface surface{};
};

struct ContactConfiguration {
  std::vector<Contact> contacts;

  [[nodiscard]] std::size_t size() const { return contacts.size(); }
  [[nodiscard]] const Contact& operator[](std::size_t i) const { return contacts[i]; }
  [[nodiscard]] Contact& operator[](std::size_t i) { return contacts[i]; }

  void validate() const {
    for (const auto& c : contacts) {
      if (!is_rotation(c.orientation)) {
        throw ConfigurationError("contact orientation is not a rotation matrix");
      }
      c.surface.validate();
    }
  }
};

struct CentroidalState {
  Vector3 com_position = Vector3::Zero();
  Vector6 momentum = Vector6::Zero(); ///< (linear [kg m/s], angular [kg m^2/s])
  std::vector<Vector3> contact_positions;

  [[nodiscard]] auto linear_momentum() const { return momentum.head<3>(); }
  [[nodiscard]] auto angular_momentum() const { return momentum.tail<3>(); }

  [[nodiscard]] bool is_finite() const {
    bool ok = com_position.allFinite() && momentum.allFinite();
    for (const auto& p : contact_positions) {
      ok = ok && p.allFinite();
    }
    return ok;
  }

  bool operator==(const CentroidalState&) const = default;
};

/// Payload wrenches at the two hands, inertial frame, applied at absolute points.
struct PayloadDisturbance {
  Wrench left_wrench{};
  Wrench right_wrench{};
  Vector3 left_point = Vector3::Zero();
  Vector3 right_point = Vector3::Zero();

  [[nodiscard]] bool is_finite() const {
    return left_wrench.is_finite() && right_wrench.is_finite() && left_point.allFinite() &&
           right_point.allFinite();
  }

  /// Total vertical payload force [N].
  [[nodiscard]] double vertical_force() const {
    return left_wrench.force.z() + right_wrench.force.z();
  }

  bool operator==(const PayloadDisturbance& o) const {
    return left_wrench.stacked() == o.left_wrench.stacked() &&
           right_wrench.stacked() == o.right_wrench.stacked() && left_point == o.left_point &&
           right_point == o.right_point;
  }
};

/// Parametrized control input: one xi and one contact velocity per foot.
struct ControlInput {
  std::vector<Vector6> xi;
  std::vector<Vector3> contact_velocity;
};

/// [[I, 0], [skew(p - c), I]]: wrench at `application_point` -> wrench about `com_position`.
[[nodiscard]] inline Matrix6 wrench_transport_map(const Vector3& application_point,
                                                  const Vector3& com_position) {
  Matrix6 a = Matrix6::Identity();
  a.block<3, 3>(3, 0) = skew(application_point - com_position);
  return a;
}

namespace detail {

inline void check_sizes(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ConfigurationError(std::string(what) + ": expected " + std::to_string(expected) +
                             " entries, got " + std::to_string(got));
  }
}

/// A_d d: the payload wrench about the CoM.
inline Vector6 payload_wrench_at_com(const PayloadDisturbance& d, const Vector3& com) {
  return wrench_transport_map(d.left_point, com) * d.left_wrench.stacked() +
         wrench_transport_map(d.right_point, com) * d.right_wrench.stacked();
}

} // namespace detail

/**
 * @brief Continuous-time centroidal dynamics.
 *
 * `wrenches` are inertial-frame wrenches about each contact point;
 * inactive contacts contribute nothing and move with their velocity.
 */
[[nodiscard]] inline CentroidalState
centroidal_dynamics(const CentroidalState& x, const ContactConfiguration& contacts,
                    std::span<const Wrench> wrenches, std::span<const Vector3> velocities,
                    const PayloadDisturbance& payload, const RobotConstants& robot) {
  const std::size_t nc = contacts.size();
  detail::check_sizes(nc, x.contact_positions.size(), "contact positions");
  detail::check_sizes(nc, wrenches.size(), "contact wrenches");
  detail::check_sizes(nc, velocities.size(), "contact velocities");

  CentroidalState dx;
  dx.com_position = x.momentum.head<3>() / robot.mass;
  dx.momentum = detail::payload_wrench_at_com(payload, x.com_position) - robot.mass * robot.gravity_vector;
  dx.contact_positions.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    if (contacts[i].active) {
      dx.momentum += wrench_transport_map(x.contact_positions[i], x.com_position) * wrenches[i].stacked();
      dx.contact_positions[i].setZero();
    } else {
      dx.contact_positions[i] = velocities[i];
    }
  }
  return dx;
}

/// x + dt * dx, component-wise.
[[nodiscard]] inline CentroidalState integrate(const CentroidalState& x, const CentroidalState& dx,
                                               double dt) {
  CentroidalState next = x;
  next.com_position += dt * dx.com_position;
  next.momentum += dt * dx.momentum;
  for (std::size_t i = 0; i < next.contact_positions.size(); ++i) {
    next.contact_positions[i] += dt * dx.contact_positions[i];
  }
  return next;
}

/// Explicit Euler step with inertial-frame wrenches already chosen.
[[nodiscard]] inline CentroidalState
euler_step(const CentroidalState& x, std::span<const Wrench> wrenches,
           std::span<const Vector3> velocities, const PayloadDisturbance& payload,
           const ContactConfiguration& contacts, const RobotConstants& robot, double dt) {
  if (!(dt > 0.0)) {
    throw ConfigurationError("euler_step: dt must be > 0");
  }
  CentroidalState next =
      integrate(x, centroidal_dynamics(x, contacts, wrenches, velocities, payload, robot), dt);
  // keep standing feet bit-for-bit where they are
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    if (contacts[i].active) {
      next.contact_positions[i] = x.contact_positions[i];
    }
  }
  return next;
}

/// Contact-frame parametrized wrenches rotated into the inertial frame.
[[nodiscard]] inline std::vector<Wrench> wrenches_from_parameters(std::span<const Vector6> xi,
                                                                  const ContactConfiguration& contacts) {
  detail::check_sizes(contacts.size(), xi.size(), "wrench parameters");
  std::vector<Wrench> out;
  out.reserve(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    out.push_back(Wrench::from(parametrize(xi[i], contacts[i].surface)).rotated(contacts[i].orientation));
  }
  return out;
}

/// Explicit Euler step driven by the parametrized input u = (xi, v_C).
[[nodiscard]] inline CentroidalState euler_step(const CentroidalState& x, const ControlInput& u,
                                                const PayloadDisturbance& payload,
                                                const ContactConfiguration& contacts,
                                                const RobotConstants& robot, double dt) {
  const auto wrenches = wrenches_from_parameters(u.xi, contacts);
  return euler_step(x, wrenches, u.contact_velocity, payload, contacts, robot, dt);
}

} // namespace pmpc
