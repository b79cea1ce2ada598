#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prefnav/error.hpp"

namespace prefnav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  [[nodiscard]] double norm() const noexcept { return std::hypot(x, y); }
  [[nodiscard]] constexpr double dot(Vec2 o) const noexcept { return x * o.x + y * o.y; }
  [[nodiscard]] constexpr double cross(Vec2 o) const noexcept { return x * o.y - y * o.x; }
};

inline double distance(Vec2 a, Vec2 b) noexcept { return (a - b).norm(); }

/// Maps any finite angle onto [-pi, pi). pi itself maps to -pi.
inline double wrap_angle(double theta) {
  require(std::isfinite(theta), ErrorCode::invalid_argument, "wrap_angle: non-finite angle");
  double r = std::fmod(theta + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod rounding on tiny negatives
  return r - kPi;
}

struct Pose2D {
  double x{0.0};
  double y{0.0};
  double heading{0.0};

  [[nodiscard]] constexpr Vec2 position() const noexcept { return {x, y}; }
  friend constexpr bool operator==(const Pose2D&, const Pose2D&) = default;
};

/// Builds a pose with the heading wrapped and the position checked.
inline Pose2D make_pose(double x, double y, double heading) {
  require(std::isfinite(x) && std::isfinite(y), ErrorCode::invalid_argument,
          "pose: non-finite position");
  return {x, y, wrap_angle(heading)};
}

/// Angle of `target` seen from `observer`, relative to the observer's heading.
/// Positive values are to the observer's left (counterclockwise).
inline double bearing_to(const Pose2D& observer, Vec2 target) {
  const Vec2 d = target - observer.position();
  require(d.x != 0.0 || d.y != 0.0, ErrorCode::degenerate_geometry,
          "bearing_to: target coincides with observer");
  return wrap_angle(std::atan2(d.y, d.x) - observer.heading);
}

/// Axis-aligned rectangle, treated as a solid set.
struct ObstacleRect {
  Vec2 min_corner;
  Vec2 max_corner;

  [[nodiscard]] constexpr bool valid() const noexcept {
    return min_corner.x < max_corner.x && min_corner.y < max_corner.y;
  }
  [[nodiscard]] constexpr Vec2 center() const noexcept {
    return {0.5 * (min_corner.x + max_corner.x), 0.5 * (min_corner.y + max_corner.y)};
  }
  [[nodiscard]] constexpr double width() const noexcept { return max_corner.x - min_corner.x; }
  [[nodiscard]] constexpr double height() const noexcept { return max_corner.y - min_corner.y; }
  [[nodiscard]] constexpr bool contains(Vec2 p) const noexcept {
    return p.x >= min_corner.x && p.x <= max_corner.x && p.y >= min_corner.y &&
           p.y <= max_corner.y;
  }
  friend constexpr bool operator==(const ObstacleRect&, const ObstacleRect&) = default;
};

inline ObstacleRect make_rect(Vec2 min_corner, Vec2 max_corner) {
  ObstacleRect r{min_corner, max_corner};
  require(r.valid(), ErrorCode::invalid_argument, "rect: min corner must be strictly below max");
  return r;
}

struct RectDistance {
  double distance{0.0};
  Vec2 closest_point;
};

inline RectDistance distance_to_rect(Vec2 point, const ObstacleRect& rect) noexcept {
  const Vec2 closest{std::clamp(point.x, rect.min_corner.x, rect.max_corner.x),
                     std::clamp(point.y, rect.min_corner.y, rect.max_corner.y)};
  return {distance(point, closest), closest};
}

/// Distance from `p` to the segment [a, b].
inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) noexcept {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

}  // namespace prefnav
