#pragma once

#include <cmath>

#include "prefnav/geometry.hpp"

namespace prefnav {

/// Forward and angular velocity command.
struct Action {
  double v{0.0};      // m/s
  double omega{0.0};  // rad/s

  friend constexpr bool operator==(const Action&, const Action&) = default;
};

struct DiffDriveParams {
  double wheel_radius{0.035};      // K
  double wheel_separation{0.23};   // L
  double control_frequency{5.0};   // Hz
  double dt{0.2};                  // s
  double v_cap{0.25};
  double omega_cap{1.5};
  double v_min_demo{0.1};
  double v_max_demo{0.25};

  [[nodiscard]] bool valid() const noexcept {
    return wheel_radius > 0.0 && wheel_separation > 0.0 && control_frequency > 0.0 &&
           std::abs(dt * control_frequency - 1.0) < 1e-12 && 0.0 < v_min_demo &&
           v_min_demo < v_max_demo && v_max_demo <= v_cap && omega_cap > 0.0;
  }
  [[nodiscard]] bool within_caps(const Action& a, double tol = 1e-9) const noexcept {
    return a.v >= -tol && a.v <= v_cap + tol && std::abs(a.omega) <= omega_cap + tol;
  }
};

/// Exact integration of a constant (v, omega) command over `dt`.
inline Pose2D step_exact(const Pose2D& pose, const Action& action, double dt) {
  const double turn = action.omega * dt;
  if (std::abs(action.omega) < 1e-9) {
    const double d = action.v * dt;
    return {pose.x + d * std::cos(pose.heading), pose.y + d * std::sin(pose.heading),
            wrap_angle(pose.heading + turn)};
  }
  const double radius = action.v / action.omega;
  const double h1 = pose.heading + turn;
  return {pose.x + radius * (std::sin(h1) - std::sin(pose.heading)),
          pose.y - radius * (std::cos(h1) - std::cos(pose.heading)), wrap_angle(h1)};
}

struct SegmentAction {
  Action action;
  bool clamped{false};  // omega hit omega_cap
};

/// Command that covers a segment of arc length `delta_d` while turning by
/// `delta_alpha` at forward speed `v` (omega = v * delta_alpha / delta_d).
inline SegmentAction action_from_segment(double delta_d, double delta_alpha, double v,
                                         const DiffDriveParams& params = {}) {
  require(delta_d > 0.0, ErrorCode::degenerate_segment, "action_from_segment: delta_d must be > 0");
  require(v > 0.0, ErrorCode::invalid_argument, "action_from_segment: v must be > 0");
  double omega = v * delta_alpha / delta_d;
  bool clamped = false;
  if (std::abs(omega) > params.omega_cap) {
    omega = std::copysign(params.omega_cap, omega);
    clamped = true;
  }
  return {{v, omega}, clamped};
}

struct WheelSpeeds {
  double left{0.0};   // rad/s
  double right{0.0};  // rad/s
};

inline WheelSpeeds wheel_speeds(const Action& action, const DiffDriveParams& params) noexcept {
  const double k = params.wheel_radius, l = params.wheel_separation;
  return {(2.0 * action.v - action.omega * l) / (2.0 * k),
          (2.0 * action.v + action.omega * l) / (2.0 * k)};
}

/// v = K/2 (u_r + u_l), omega = K/L (u_r - u_l).
inline Action body_velocity(const WheelSpeeds& wheels, const DiffDriveParams& params) noexcept {
  const double k = params.wheel_radius, l = params.wheel_separation;
  return {0.5 * k * (wheels.right + wheels.left), k / l * (wheels.right - wheels.left)};
}

}  // namespace prefnav
