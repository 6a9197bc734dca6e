/**
 * @file gait.hpp
 * @brief Walking schedule, nominal references and payload construction for
 * the two-legged closed-loop experiments.
 *
 * Contact 0 is the left foot (+y), contact 1 the right foot (-y). The
 * schedule starts and ends in double support and alternates single-support
 * phases (left foot swinging first) with double-support phases. Every swing
 * moves the foot forward by step_length, so after 2n steps both feet stand
 * n step lengths ahead of the start.
 */
#pragma once

#include "pmpc/horizon.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace pmpc {

struct GaitParameters {
  double step_length = 0.2;             ///< [m]
  double step_width = 0.2;              ///< [m], lateral distance between the feet
  double single_support_duration = 0.8; ///< [s]
  double double_support_duration = 0.4; ///< [s]
  int number_of_steps = 4;
  double com_height = 0.53; ///< c_z [m]

  void validate(double dt) const {
    auto multiple = [dt](double duration, const char* name) {
      const double n = duration / dt;
      if (!(duration > 0.0) || std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n)) {
        throw ConfigurationError(std::string("gait: ") + name +
                                 " must be a positive integer multiple of the MPC period");
      }
    };
    multiple(single_support_duration, "single_support_duration");
    multiple(double_support_duration, "double_support_duration");
    if (number_of_steps < 0) {
      throw ConfigurationError("gait: number_of_steps must be >= 0");
    }
    if (!std::isfinite(step_length) || !(step_width >= 0.0) || !(com_height > 0.0)) {
      throw ConfigurationError("gait: step_length must be finite, step_width >= 0, com_height > 0");
    }
  }
};

/// One support phase on the MPC grid, ticks [start, start + length).
struct GaitPhase {
  int start = 0;
  int length = 0;
  int swing = -1; ///< swinging contact, -1 in double support
};

/**
 * Per-contact activity and footstep references sampled on the MPC grid.
 * Samples beyond the last one repeat it (final double support).
 */
struct GaitSchedule {
  double dt = 0.2;
  std::vector<GaitPhase> phases;
  std::vector<std::vector<bool>> active;       ///< [contact][tick]
  std::vector<std::vector<Vector3>> footsteps; ///< [contact][tick]
  std::vector<Matrix3> orientations;
  std::vector<Vector3> com; ///< filled by generate_nominal_com_reference()

  [[nodiscard]] int num_contacts() const { return static_cast<int>(active.size()); }
  /// Index of the last explicit sample.
  [[nodiscard]] int last_tick() const { return active.empty() ? 0 : static_cast<int>(active[0].size()) - 1; }
  [[nodiscard]] int clamp(int n) const { return std::min(std::max(n, 0), last_tick()); }

  [[nodiscard]] bool is_active(int i, int n) const { return active[i][clamp(n)]; }
  [[nodiscard]] Vector3 footstep(int i, int n) const { return footsteps[i][clamp(n)]; }
  [[nodiscard]] Vector3 com_reference(int n) const { return com.at(clamp(n)); }

  /// References for ticks n .. n + horizon.
  [[nodiscard]] HorizonReferences window(int n, int horizon) const {
    HorizonReferences r;
    r.footsteps.resize(num_contacts());
    r.gait.resize(num_contacts());
    r.orientations = orientations;
    for (int k = 0; k <= horizon; ++k) {
      r.com.push_back(com_reference(n + k));
      for (int i = 0; i < num_contacts(); ++i) {
        r.footsteps[i].push_back(footstep(i, n + k));
        r.gait[i].push_back(is_active(i, n + k));
      }
    }
    return r;
  }
};

[[nodiscard]] inline GaitSchedule generate_gait_schedule(const GaitParameters& params, const MpcConfig& config) {
  params.validate(config.dt);
  if (config.num_contacts() != 2) {
    throw ConfigurationError("gait: the walking schedule needs exactly two contacts");
  }
  const int ss = static_cast<int>(std::lround(params.single_support_duration / config.dt));
  const int ds = static_cast<int>(std::lround(params.double_support_duration / config.dt));

  GaitSchedule g;
  g.dt = config.dt;
  g.orientations.assign(2, Matrix3::Identity());
  g.phases.push_back({0, ds, -1});
  for (int s = 0; s < params.number_of_steps; ++s) {
    const int start = g.phases.back().start + g.phases.back().length;
    g.phases.push_back({start, ss, s % 2});
    g.phases.push_back({start + ss, ds, -1});
  }
  const int ticks = g.phases.back().start + g.phases.back().length;

  std::vector<Vector3> feet{Vector3(0.0, params.step_width / 2.0, 0.0),
                            Vector3(0.0, -params.step_width / 2.0, 0.0)};
  g.active.assign(2, std::vector<bool>(ticks + 1, true));
  g.footsteps.assign(2, std::vector<Vector3>(ticks + 1));
  for (const auto& ph : g.phases) {
    Vector3 lift, land;
    if (ph.swing >= 0) {
      lift = feet[ph.swing];
      land = lift + Vector3(params.step_length, 0.0, 0.0);
    }
    for (int n = ph.start; n < ph.start + ph.length; ++n) {
      for (int i = 0; i < 2; ++i) {
        g.footsteps[i][n] = feet[i];
      }
      if (ph.swing >= 0) {
        const double s = static_cast<double>(n - ph.start) / ph.length;
        g.active[ph.swing][n] = false;
        g.footsteps[ph.swing][n] = lift + s * (land - lift);
      }
    }
    if (ph.swing >= 0) {
      feet[ph.swing] = land;
    }
  }
  for (int i = 0; i < 2; ++i) {
    g.footsteps[i][ticks] = feet[i];
  }
  return g;
}

/**
 * Fill `schedule.com`: z = com_height; horizontally, each phase moves
 * linearly from where the previous phase ended to the support midpoint of
 * its own stance feet, reaching it on the phase's last tick. The first
 * phase starts at its own midpoint.
 */
inline void generate_nominal_com_reference(GaitSchedule& schedule, const GaitParameters& params) {
  const int ticks = schedule.last_tick();
  schedule.com.assign(ticks + 1, Vector3::Zero());
  auto support_midpoint = [&](const GaitPhase& ph) {
    Vector3 m = Vector3::Zero();
    int count = 0;
    for (int i = 0; i < schedule.num_contacts(); ++i) {
      if (i != ph.swing) {
        // stance feet do not move within a phase
        m += schedule.footsteps[i][ph.start];
        ++count;
      }
    }
    return Vector3(m / count);
  };
  Vector3 from = support_midpoint(schedule.phases.front());
  for (const GaitPhase& ph : schedule.phases) {
    const Vector3 to = support_midpoint(ph);
    for (int n = ph.start; n < ph.start + ph.length; ++n) {
      const double s = static_cast<double>(n - ph.start + 1) / ph.length;
      schedule.com[n] = from + s * (to - from);
    }
    from = to;
  }
  schedule.com[ticks] = from;
  for (auto& c : schedule.com) {
    c.z() = params.com_height;
  }
}

/// Default hand attachment offsets from the CoM: (0.25, +-0.1, -c_z / 4).
[[nodiscard]] inline std::pair<Vector3, Vector3> default_payload_offsets(double com_height) {
  return {Vector3(0.25, 0.1, -com_height / 4.0), Vector3(0.25, -0.1, -com_height / 4.0)};
}

/**
 * Downward weight mass * g split equally over the two attachment points,
 * zero moments. Points are returned as given (offsets from the CoM); use
 * attach_payload() to place them at a CoM position.
 */
[[nodiscard]] inline PayloadDisturbance payload_from_mass(double mass, const Vector3& left_offset,
                                                          const Vector3& right_offset) {
  if (!(mass >= 0.0) || !std::isfinite(mass)) {
    throw ConfigurationError("payload: mass must be >= 0");
  }
  PayloadDisturbance d;
  d.left_wrench.force = Vector3(0.0, 0.0, -mass * kGravity / 2.0);
  d.right_wrench.force = d.left_wrench.force;
  d.left_point = left_offset;
  d.right_point = right_offset;
  return d;
}

[[nodiscard]] inline PayloadDisturbance payload_from_mass(double mass, double com_height = 0.53) {
  const auto [l, r] = default_payload_offsets(com_height);
  return payload_from_mass(mass, l, r);
}

/// Translate CoM-relative attachment points to absolute ones.
[[nodiscard]] inline PayloadDisturbance attach_payload(PayloadDisturbance relative, const Vector3& com) {
  relative.left_point += com;
  relative.right_point += com;
  return relative;
}

} // namespace pmpc
