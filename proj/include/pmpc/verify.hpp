/**
 * @file verify.hpp
 * @brief Sampling checks of the wrench parametrization: soundness over a box
 * of parameters and coverage of the interior of the stable-wrench set.
 */
#pragma once

#include "pmpc/contact.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace pmpc {

/// A valid, generally asymmetric surface with randomized geometry and friction.
template <typename Rng>
[[nodiscard]] ContactSurface random_surface(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  ContactSurface s;
  s.x_min = in(-0.25, -0.02);
  s.x_max = in(0.02, 0.25);
  s.y_min = in(-0.12, -0.01);
  s.y_max = in(0.01, 0.12);
  s.mu_c = in(0.1, 1.2);
  s.mu_z = in(0.002, 0.1);
  s.fz_min = in(0.0, 2.0);
  return s;
}

struct SoundnessReport {
  long samples = 0;
  long failures = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  Vector6 worst_xi = Vector6::Zero();
  [[nodiscard]] bool passed() const { return failures == 0; }
};

/**
 * Draw `samples` parameters uniformly from [lo, hi]^6, cycling through
 * `surfaces`, and check parametrize(xi) with is_contact_stable().
 */
[[nodiscard]] inline SoundnessReport check_soundness(const std::vector<ContactSurface>& surfaces, long samples,
                                                     double lo, double hi, std::uint64_t seed) {
  if (surfaces.empty() || samples < 1 || !(lo <= hi)) {
    throw ConfigurationError("soundness: need a surface, samples >= 1 and lo <= hi");
  }
  for (const auto& s : surfaces) {
    s.validate();
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  SoundnessReport r;
  for (long n = 0; n < samples; ++n) {
    const ContactSurface& s = surfaces[static_cast<std::size_t>(n) % surfaces.size()];
    Vector6 xi;
    for (int j = 0; j < 6; ++j) {
      xi(j) = u(rng);
    }
    const StabilityReport rep = is_contact_stable(parametrize(xi, s), s);
    ++r.samples;
    if (!rep.satisfied) {
      ++r.failures;
    }
    if (rep.min_margin() < r.min_margin) {
      r.min_margin = rep.min_margin();
      r.worst_xi = xi;
    }
  }
  return r;
}

struct CoverageOptions {
  double margin = 0.05;            ///< fraction of each bound kept free
  double max_normal_force = 100.0; ///< [N]
};

struct CoverageReport {
  long points = 0;
  long inverted = 0;
  [[nodiscard]] double fraction() const { return points ? static_cast<double>(inverted) / points : 0.0; }
};

/**
 * Wrench strictly inside the stable set: Fz in the shrunken normal range,
 * tangential ratio inside a disk of radius (1 - margin), CoP and torsion
 * ratios inside the shrunken rectangle / interval. `unit` holds six
 * numbers in [0, 1).
 */
[[nodiscard]] inline Wrench interior_wrench(const Vector6& unit, const ContactSurface& s,
                                            const CoverageOptions& opt) {
  const double keep = 1.0 - opt.margin;
  const double f_lo = s.fz_min + opt.margin * (opt.max_normal_force - s.fz_min);
  const double f_hi = s.fz_min + keep * (opt.max_normal_force - s.fz_min);
  const double fz = f_lo + unit(0) * (f_hi - f_lo);
  // uniform in the disk
  const double radius = keep * std::sqrt(unit(1));
  const double angle = 2.0 * std::acos(-1.0) * unit(2);
  const double wx = s.x_max - s.x_min, wy = s.y_max - s.y_min;
  const double cop_x = s.x_min + opt.margin * wx + unit(3) * (1.0 - 2.0 * opt.margin) * wx;
  const double cop_y = s.y_min + opt.margin * wy + unit(4) * (1.0 - 2.0 * opt.margin) * wy;
  const double tz = (2.0 * unit(5) - 1.0) * keep;
  Wrench w;
  w.force = Vector3(s.mu_c * fz * radius * std::cos(angle), s.mu_c * fz * radius * std::sin(angle), fz);
  w.moment = Vector3(cop_y * fz, -cop_x * fz, tz * s.mu_z * fz);
  return w;
}

/// Monte Carlo estimate of the fraction of interior wrenches with a preimage.
[[nodiscard]] inline CoverageReport estimate_coverage(const ContactSurface& s, long points, std::uint64_t seed,
                                                      const CoverageOptions& opt = {}) {
  s.validate();
  if (points < 1 || !(opt.margin > 0.0 && opt.margin < 0.5) || !(opt.max_normal_force > s.fz_min)) {
    throw ConfigurationError("coverage: need points >= 1, 0 < margin < 0.5, max_normal_force > fz_min");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CoverageReport r;
  for (long n = 0; n < points; ++n) {
    Vector6 unit;
    for (int j = 0; j < 6; ++j) {
      unit(j) = u(rng);
    }
    ++r.points;
    r.inverted += try_invert_parametrization(interior_wrench(unit, s, opt), s) ? 1 : 0;
  }
  return r;
}

} // namespace pmpc
