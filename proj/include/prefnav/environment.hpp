#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "prefnav/geometry.hpp"

namespace prefnav {

struct RadiusConfig {
  double robot_radius{0.18};
  double human_radius{0.30};
  double goal_radius{0.30};

  [[nodiscard]] constexpr bool valid() const noexcept {
    return robot_radius > 0.0 && human_radius > 0.0 && goal_radius > 0.0;
  }
};

/// A static planar environment. The obstacle order is the canonical order of
/// the per-obstacle features in the observation vector.
struct EnvironmentSpec {
  std::string name;
  ObstacleRect bounds;
  std::vector<ObstacleRect> obstacles;
  std::array<Pose2D, 4> human_anchors{};
  Pose2D robot_start_anchor;
  Vec2 goal_anchor;

  [[nodiscard]] double diagonal() const noexcept {
    return std::hypot(bounds.width(), bounds.height());
  }
  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

/// One concrete episode configuration.
struct Scene {
  EnvironmentSpec env;
  Pose2D human;
  Pose2D robot_start;
  Vec2 goal;
  int anchor{-1};  // index into env.human_anchors, -1 for non-anchor scenes

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct ObstacleFeature {
  double distance{0.0};
  double bearing{0.0};
};

/// Distance and bearing from the robot to the closest point of every obstacle,
/// in canonical obstacle order. A robot center inside an obstacle yields
/// distance 0 and the bearing towards the obstacle center.
inline std::vector<ObstacleFeature> obstacle_features(const Pose2D& robot,
                                                      const EnvironmentSpec& env) {
  std::vector<ObstacleFeature> out;
  out.reserve(env.obstacles.size());
  const Vec2 p = robot.position();
  for (const auto& rect : env.obstacles) {
    const RectDistance rd = distance_to_rect(p, rect);
    if (rd.distance > 0.0) {
      out.push_back({rd.distance, bearing_to(robot, rd.closest_point)});
    } else {
      const Vec2 c = rect.center();
      out.push_back({0.0, c == p ? 0.0 : bearing_to(robot, c)});
    }
  }
  return out;
}

/// Smallest center-to-surface distance from `p` to any obstacle.
inline double nearest_obstacle_distance(Vec2 p, const EnvironmentSpec& env) noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rect : env.obstacles) best = std::min(best, distance_to_rect(p, rect).distance);
  return best;
}

enum class CollisionKind { none, obstacle, human, out_of_bounds };

struct CollisionResult {
  CollisionKind kind{CollisionKind::none};
  int obstacle_index{-1};

  [[nodiscard]] constexpr bool hit() const noexcept { return kind != CollisionKind::none; }
  friend constexpr bool operator==(const CollisionResult&, const CollisionResult&) = default;
};

/// Disc-based overlap test. Touching is not a collision; overlap must be strict.
/// Priority: obstacle, then human, then bounds.
inline CollisionResult collision_check(Vec2 robot, const EnvironmentSpec& env,
                                       const Pose2D& human, const RadiusConfig& radii) noexcept {
  for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
    if (distance_to_rect(robot, env.obstacles[i]).distance < radii.robot_radius)
      return {CollisionKind::obstacle, static_cast<int>(i)};
  }
  if (distance(robot, human.position()) < radii.robot_radius + radii.human_radius)
    return {CollisionKind::human, -1};
  const double r = radii.robot_radius;
  const auto& b = env.bounds;
  if (robot.x - r < b.min_corner.x || robot.x + r > b.max_corner.x ||
      robot.y - r < b.min_corner.y || robot.y + r > b.max_corner.y)
    return {CollisionKind::out_of_bounds, -1};
  return {};
}

inline CollisionResult collision_check(const Pose2D& robot, const Scene& scene,
                                       const RadiusConfig& radii) noexcept {
  return collision_check(robot.position(), scene.env, scene.human, radii);
}

/// True when a disc of `radius` at `p` lies inside bounds and clear of all obstacles.
inline bool disc_free(Vec2 p, double radius, const EnvironmentSpec& env) noexcept {
  const auto& b = env.bounds;
  if (p.x - radius < b.min_corner.x || p.x + radius > b.max_corner.x ||
      p.y - radius < b.min_corner.y || p.y + radius > b.max_corner.y)
    return false;
  return nearest_obstacle_distance(p, env) >= radius;
}

/// Checks the structural invariants of an environment: valid rectangles and
/// anchors that are inside bounds and collision-free at the given radii.
inline void validate_environment(const EnvironmentSpec& env, const RadiusConfig& radii) {
  require(!env.name.empty(), ErrorCode::invalid_argument, "environment: empty name");
  require(env.bounds.valid(), ErrorCode::invalid_argument, "environment: invalid bounds");
  for (const auto& o : env.obstacles)
    require(o.valid(), ErrorCode::invalid_argument, "environment: invalid obstacle rectangle");
  require(disc_free(env.robot_start_anchor.position(), radii.robot_radius, env),
          ErrorCode::invalid_argument, "environment: robot start anchor not free");
  require(disc_free(env.goal_anchor, radii.robot_radius, env), ErrorCode::invalid_argument,
          "environment: goal anchor not free");
  for (const auto& h : env.human_anchors) {
    require(disc_free(h.position(), radii.human_radius, env), ErrorCode::invalid_argument,
            "environment: human anchor not free");
    require(distance(h.position(), env.robot_start_anchor.position()) >=
                radii.robot_radius + radii.human_radius,
            ErrorCode::invalid_argument, "environment: human anchor overlaps robot start");
  }
}

inline void validate_scene(const Scene& scene, const RadiusConfig& radii) {
  require(disc_free(scene.human.position(), radii.human_radius, scene.env),
          ErrorCode::invalid_argument, "scene: human not free");
  require(!collision_check(scene.robot_start, scene, radii).hit(), ErrorCode::invalid_argument,
          "scene: robot start in collision");
  require(scene.env.bounds.contains(scene.goal), ErrorCode::invalid_argument,
          "scene: goal outside bounds");
}

namespace detail {

/// Perimeter walls of thickness `t` around the interior [0, w] x [0, h].
inline std::vector<ObstacleRect> perimeter_walls(double w, double h, double t) {
  return {
      make_rect({-t, -t}, {w + t, 0.0}),  // bottom
      make_rect({-t, h}, {w + t, h + t}),  // top
      make_rect({-t, 0.0}, {0.0, h}),      // left
      make_rect({w, 0.0}, {w + t, h}),     // right
  };
}

}  // namespace detail

inline constexpr double kWallThickness = 0.1;

/// 6 m x 2 m corridor; start and goal at opposite ends.
inline EnvironmentSpec corridor_environment() {
  constexpr double w = 6.0, h = 2.0, t = kWallThickness;
  EnvironmentSpec env;
  env.name = "corridor";
  env.bounds = make_rect({-t, -t}, {w + t, h + t});
  env.obstacles = detail::perimeter_walls(w, h, t);
  env.human_anchors = {make_pose(3.0, 0.50, kPi / 2), make_pose(3.0, 1.50, -kPi / 2),
                       make_pose(2.6, 0.55, kPi), make_pose(3.4, 1.45, 0.0)};
  env.robot_start_anchor = make_pose(0.5, 1.0, 0.0);
  env.goal_anchor = {5.5, 1.0};
  return env;
}

/// 5 m x 5 m room; start and goal on opposite sides.
inline EnvironmentSpec room_environment() {
  constexpr double w = 5.0, h = 5.0, t = kWallThickness;
  EnvironmentSpec env;
  env.name = "room";
  env.bounds = make_rect({-t, -t}, {w + t, h + t});
  env.obstacles = detail::perimeter_walls(w, h, t);
  env.human_anchors = {make_pose(2.5, 1.10, kPi), make_pose(2.2, 1.30, -kPi / 2),
                       make_pose(2.8, 1.05, kPi / 2), make_pose(2.5, 1.40, 0.0)};
  env.robot_start_anchor = make_pose(0.5, 0.8, 0.0);
  env.goal_anchor = {4.5, 0.8};
  return env;
}

inline std::vector<EnvironmentSpec> builtin_environments() {
  return {corridor_environment(), room_environment()};
}

inline std::optional<EnvironmentSpec> find_builtin_environment(const std::string& name) {
  for (auto& env : builtin_environments())
    if (env.name == name) return env;
  return std::nullopt;
}

/// The four anchor scenes of one environment.
inline std::vector<Scene> anchor_scenes(const EnvironmentSpec& env) {
  std::vector<Scene> out;
  for (std::size_t i = 0; i < env.human_anchors.size(); ++i)
    out.push_back({env, env.human_anchors[i], env.robot_start_anchor, env.goal_anchor,
                   static_cast<int>(i)});
  return out;
}

/// Corridor anchor scenes followed by room anchor scenes.
inline std::vector<Scene> builtin_scenes() {
  std::vector<Scene> out;
  for (const auto& env : builtin_environments()) {
    auto s = anchor_scenes(env);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

inline std::string scene_id(const Scene& scene) {
  return scene.env.name + "-" + (scene.anchor >= 0 ? std::to_string(scene.anchor) : "x");
}

}  // namespace prefnav
