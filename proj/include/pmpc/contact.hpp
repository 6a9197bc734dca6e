/**
 * @file contact.hpp
 * @brief Contact-stability conditions for a rectangular planar contact and
 * the smooth map from R^6 onto (a subset of) the stable wrench set.
 *
 * A wrench w = (Fx, Fy, Fz, Mx, My, Mz), expressed in the contact frame, is
 * stable when
 *   Fz > fz_min >= 0,
 *   sqrt(Fx^2 + Fy^2) < mu_c Fz,
 *   y_min < Mx / Fz < y_max,
 *   x_min < -My / Fz < x_max,
 *   |Mz / Fz| < mu_z.
 * parametrize() maps every xi in R^6 strictly inside that set, so an
 * optimizer working on xi never needs the inequalities above.
 */
#pragma once

#include "pmpc/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

namespace pmpc {

/// Rectangular contact surface and friction data.
struct ContactSurface {
  double x_min = -0.1; ///< [m]
  double x_max = 0.1;  ///< [m]
  double y_min = -0.05; ///< [m]
  double y_max = 0.05;  ///< [m]
  double mu_c = 0.33;  ///< static friction coefficient
  double mu_z = 0.01;  ///< torsional friction coefficient
  double fz_min = 0.01; ///< minimum normal force [N]

  /// Throws ConfigurationError naming the first violated invariant.
  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(finite(x_min) && finite(x_max) && finite(y_min) && finite(y_max) && finite(mu_c) &&
          finite(mu_z) && finite(fz_min))) {
      throw ConfigurationError("contact surface: non-finite field");
    }
    if (!(x_min < x_max)) {
      throw ConfigurationError("contact surface: x_min must be < x_max");
    }
    if (!(y_min < y_max)) {
      throw ConfigurationError("contact surface: y_min must be < y_max");
    }
    if (!(mu_c > 0.0)) {
      throw ConfigurationError("contact surface: mu_c must be > 0");
    }
    if (!(mu_z > 0.0)) {
      throw ConfigurationError("contact surface: mu_z must be > 0");
    }
    if (!(fz_min >= 0.0)) {
      throw ConfigurationError("contact surface: fz_min must be >= 0");
    }
  }

  /// Corner offsets in the contact frame (counter-clockwise from (x_min, y_min)).
  [[nodiscard]] std::array<Vector3, 4> vertex_offsets() const {
    return {Vector3{x_min, y_min, 0.0}, Vector3{x_max, y_min, 0.0}, Vector3{x_max, y_max, 0.0},
            Vector3{x_min, y_max, 0.0}};
  }
};

/// Half-extents and centre offsets of the rectangle. Note delta_x0 is the
/// negated x centre while delta_y0 is the y centre itself: My = -Fz * CoP_x.
struct SurfaceOffsets {
  double delta_x = 0.0;
  double delta_x0 = 0.0;
  double delta_y = 0.0;
  double delta_y0 = 0.0;
};

[[nodiscard]] inline SurfaceOffsets surface_offsets(const ContactSurface& s) {
  return SurfaceOffsets{(s.x_max - s.x_min) / 2.0, -(s.x_max + s.x_min) / 2.0,
                        (s.y_max - s.y_min) / 2.0, (s.y_max + s.y_min) / 2.0};
}

/// Largest |xi_3| accepted before exp() would overflow.
inline constexpr double kMaxNormalParameter = 700.0;

namespace detail {

inline void check_parameter(const Vector6& xi) {
  if (!xi.allFinite()) {
    throw ParameterRangeError("wrench parameter has non-finite entries");
  }
  if (std::abs(xi(2)) > kMaxNormalParameter) {
    throw ParameterRangeError("wrench parameter |xi_3| = " + std::to_string(std::abs(xi(2))) +
                              " exceeds " + std::to_string(kMaxNormalParameter));
  }
}

} // namespace detail

/// phi(xi): the contact-stable wrench parametrization (contact frame).
[[nodiscard]] inline Vector6 parametrize(const Vector6& xi, const ContactSurface& s) {
  detail::check_parameter(xi);
  const SurfaceOffsets o = surface_offsets(s);
  const double t1 = std::tanh(xi(0));
  const double t2 = std::tanh(xi(1));
  const double fz = std::exp(xi(2)) + s.fz_min;
  Vector6 w;
  w(0) = s.mu_c * t1 * fz / std::sqrt(1.0 + t2 * t2);
  w(1) = s.mu_c * t2 * fz / std::sqrt(1.0 + t1 * t1);
  w(2) = fz;
  w(3) = (o.delta_y * std::tanh(xi(3)) + o.delta_y0) * fz;
  w(4) = (o.delta_x * std::tanh(xi(4)) + o.delta_x0) * fz;
  w(5) = s.mu_z * std::tanh(xi(5)) * fz;
  return w;
}

/// Analytic Jacobian d phi / d xi (row = wrench component).
[[nodiscard]] inline Matrix6 parametrize_jacobian(const Vector6& xi, const ContactSurface& s) {
  detail::check_parameter(xi);
  const SurfaceOffsets o = surface_offsets(s);
  const double t1 = std::tanh(xi(0));
  const double t2 = std::tanh(xi(1));
  const double t4 = std::tanh(xi(3));
  const double t5 = std::tanh(xi(4));
  const double t6 = std::tanh(xi(5));
  const double e3 = std::exp(xi(2));
  const double fz = e3 + s.fz_min;
  const double n1 = std::sqrt(1.0 + t1 * t1);
  const double n2 = std::sqrt(1.0 + t2 * t2);
  const double s1 = 1.0 - t1 * t1;
  const double s2 = 1.0 - t2 * t2;

  Matrix6 j = Matrix6::Zero();
  j(0, 0) = s.mu_c * s1 * fz / n2;
  j(0, 1) = -s.mu_c * t1 * fz * t2 * s2 / (n2 * n2 * n2);
  j(0, 2) = s.mu_c * t1 * e3 / n2;
  j(1, 0) = -s.mu_c * t2 * fz * t1 * s1 / (n1 * n1 * n1);
  j(1, 1) = s.mu_c * s2 * fz / n1;
  j(1, 2) = s.mu_c * t2 * e3 / n1;
  j(2, 2) = e3;
  j(3, 2) = (o.delta_y * t4 + o.delta_y0) * e3;
  j(3, 3) = o.delta_y * (1.0 - t4 * t4) * fz;
  j(4, 2) = (o.delta_x * t5 + o.delta_x0) * e3;
  j(4, 4) = o.delta_x * (1.0 - t5 * t5) * fz;
  j(5, 2) = s.mu_z * t6 * e3;
  j(5, 5) = s.mu_z * (1.0 - t6 * t6) * fz;
  return j;
}

/// Per-condition slack of the stability conditions, positive = satisfied.
struct StabilityReport {
  bool satisfied = false;
  /// (unilaterality, friction, CoP-y, CoP-x, torsion)
  std::array<double, 5> margins{};

  [[nodiscard]] double min_margin() const {
    double m = margins[0];
    for (double v : margins) {
      m = std::min(m, v);
    }
    return m;
  }
};

[[nodiscard]] inline StabilityReport is_contact_stable(const Wrench& w, const ContactSurface& s) {
  StabilityReport r;
  const double fz = w.force.z();
  r.margins[0] = fz - s.fz_min;
  if (!(fz > 0.0) || !w.is_finite()) {
    // ratios are undefined; only the unilateral margin is meaningful
    r.margins[1] = r.margins[2] = r.margins[3] = r.margins[4] = -1.0;
    r.satisfied = false;
    return r;
  }
  const double cop_y = w.moment.x() / fz;
  const double cop_x = -w.moment.y() / fz;
  r.margins[1] = s.mu_c * fz - std::hypot(w.force.x(), w.force.y());
  r.margins[2] = std::min(cop_y - s.y_min, s.y_max - cop_y);
  r.margins[3] = std::min(cop_x - s.x_min, s.x_max - cop_x);
  r.margins[4] = s.mu_z - std::abs(w.moment.z()) / fz;
  r.satisfied = r.min_margin() > 0.0;
  return r;
}

[[nodiscard]] inline StabilityReport is_contact_stable(const Vector6& w, const ContactSurface& s) {
  return is_contact_stable(Wrench::from(w), s);
}

/// Options of the damped Gauss-Newton inverse.
struct InversionOptions {
  int max_iterations = 100;
  double tolerance = 1e-6; ///< relative to max(1, |w_target|)
};

namespace detail {

inline double clipped_atanh(double v) {
  constexpr double kClip = 1.0 - 1e-12;
  return std::atanh(std::clamp(v, -kClip, kClip));
}

/// Row-wise closed-form preimage (exact wherever it exists).
inline Vector6 closed_form_preimage(const Vector6& w, const ContactSurface& s) {
  const SurfaceOffsets o = surface_offsets(s);
  const double fz = w(2);
  Vector6 xi;
  xi(2) = std::log(std::max(fz - s.fz_min, 1e-300));
  // Fx = mu Fz t1 / sqrt(1 + t2^2), Fy = mu Fz t2 / sqrt(1 + t1^2)
  const double a = w(0) / (s.mu_c * fz);
  const double b = w(1) / (s.mu_c * fz);
  const double den = std::max(1.0 - a * a * b * b, 1e-300);
  const double t1 = std::copysign(std::sqrt(a * a * (1.0 + b * b) / den), a);
  const double t2 = std::copysign(std::sqrt(b * b * (1.0 + a * a) / den), b);
  xi(0) = clipped_atanh(t1);
  xi(1) = clipped_atanh(t2);
  xi(3) = clipped_atanh((w(3) / fz - o.delta_y0) / o.delta_y);
  xi(4) = clipped_atanh((w(4) / fz - o.delta_x0) / o.delta_x);
  xi(5) = clipped_atanh(w(5) / (s.mu_z * fz));
  return xi;
}

} // namespace detail

/**
 * @brief Numeric preimage of a strictly stable wrench under parametrize().
 *
 * Starts from the row-wise closed form (or from `xi_init`, whichever has the
 * smaller residual) and refines with a Levenberg-damped Gauss-Newton
 * iteration. Returns std::nullopt when the target is not strictly stable, or
 * lies outside the image of the map, or the iteration stalls.
 */
[[nodiscard]] inline std::optional<Vector6>
try_invert_parametrization(const Wrench& target, const ContactSurface& s,
                           const std::optional<Vector6>& xi_init = std::nullopt,
                           const InversionOptions& options = {}) {
  if (!is_contact_stable(target, s).satisfied) {
    return std::nullopt;
  }
  const Vector6 w = target.stacked();
  const double tol = options.tolerance * std::max(1.0, w.norm());

  auto residual = [&](const Vector6& xi) -> std::optional<Vector6> {
    if (!xi.allFinite() || std::abs(xi(2)) > kMaxNormalParameter) {
      return std::nullopt;
    }
    return Vector6(parametrize(xi, s) - w);
  };

  Vector6 xi = detail::closed_form_preimage(w, s);
  auto r = residual(xi);
  if (xi_init) {
    if (auto ri = residual(*xi_init); ri && (!r || ri->norm() < r->norm())) {
      xi = *xi_init;
      r = ri;
    }
  }
  if (!r) {
    return std::nullopt;
  }

  double damping = 1e-6;
  for (int it = 0; it < options.max_iterations && r->norm() > 1e-3 * tol; ++it) {
    const Matrix6 j = parametrize_jacobian(xi, s);
    const Matrix6 jtj = j.transpose() * j;
    const Vector6 g = j.transpose() * (*r);
    bool improved = false;
    for (int trial = 0; trial < 30; ++trial) {
      const Vector6 step = -(jtj + damping * Matrix6::Identity()).ldlt().solve(g);
      const Vector6 candidate = xi + step;
      if (auto rc = residual(candidate); rc && rc->norm() < r->norm()) {
        xi = candidate;
        r = rc;
        damping = std::max(damping * 0.1, 1e-12);
        improved = true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) {
      break;
    }
  }
  if (r->norm() <= tol) {
    return xi;
  }
  return std::nullopt;
}

/// Throwing variant; raises InversionFailure when no preimage is found.
[[nodiscard]] inline Vector6 invert_parametrization(const Wrench& target, const ContactSurface& s,
                                                    const std::optional<Vector6>& xi_init = std::nullopt,
                                                    const InversionOptions& options = {}) {
  if (auto xi = try_invert_parametrization(target, s, xi_init, options)) {
    return *xi;
  }
  throw InversionFailure("no parameter found for the requested wrench");
}

} // namespace pmpc
