/**
 * @file core.hpp
 * @brief Common linear-algebra aliases, the 6D wrench type and the error
 * hierarchy shared by every pmpc module.
 */
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pmpc {

using Vector3 = Eigen::Vector3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// Standard gravity magnitude [m/s^2].
inline constexpr double kGravity = 9.81;

/// Raised for inconsistent sizes, invalid parameters or malformed documents.
class ConfigurationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a parameter vector leaves the numerically safe range.
class ParameterRangeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when the numeric inverse of the wrench parametrization fails.
class InversionFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a horizon step has no active contact (flight phase).
class InfeasiblePhaseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief A 6D wrench: force [N] and moment [N m].
 *
 * Stacked as (Fx, Fy, Fz, Mx, My, Mz). The frame is whatever the caller
 * says it is: contact frame for parametrized foot wrenches, inertial frame
 * once rotated.
 */
struct Wrench {
  Vector3 force = Vector3::Zero();
  Vector3 moment = Vector3::Zero();

  [[nodiscard]] Vector6 stacked() const {
    Vector6 w;
    w << force, moment;
    return w;
  }

  [[nodiscard]] static Wrench from(const Vector6& w) {
    return Wrench{w.head<3>(), w.tail<3>()};
  }

  [[nodiscard]] bool is_finite() const { return force.allFinite() && moment.allFinite(); }

  /// Re-express a wrench given in a frame with orientation `rotation`.
  [[nodiscard]] Wrench rotated(const Matrix3& rotation) const {
    return Wrench{rotation * force, rotation * moment};
  }
};

/// Skew-symmetric matrix such that skew(v) * u == v.cross(u).
[[nodiscard]] inline Matrix3 skew(const Vector3& v) {
  Matrix3 s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

/// Adjoint of skew(): the gradient w.r.t. v of <grad, skew(v)>.
[[nodiscard]] inline Vector3 skew_adjoint(const Matrix3& grad) {
  return {grad(2, 1) - grad(1, 2), grad(0, 2) - grad(2, 0), grad(1, 0) - grad(0, 1)};
}

/// Orthonormality check for rotation matrices (R^T R = I, det = +1).
[[nodiscard]] inline bool is_rotation(const Matrix3& r, double tolerance = 1e-9) {
  return (r.transpose() * r - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tolerance &&
         std::abs(r.determinant() - 1.0) <= tolerance;
}

} // namespace pmpc
