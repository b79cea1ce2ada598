#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "prefnav/diffdrive.hpp"
#include "prefnav/environment.hpp"

namespace prefnav {

using Rng = std::mt19937_64;

/// Robot-centric observation:
///   [d_H, bearing_H, bearing_G, relative body orientation, (d_Oi, bearing_Oi)...]
struct StateVector {
  static constexpr std::size_t kHumanDistance = 0;
  static constexpr std::size_t kHumanBearing = 1;
  static constexpr std::size_t kGoalBearing = 2;
  static constexpr std::size_t kHumanOrientation = 3;
  static constexpr std::size_t kFirstObstacle = 4;

  std::vector<double> values;

  [[nodiscard]] static constexpr std::size_t dimension_for(std::size_t n_obstacles) noexcept {
    return kFirstObstacle + 2 * n_obstacles;
  }
  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] std::size_t obstacle_count() const noexcept {
    return (values.size() - kFirstObstacle) / 2;
  }
  [[nodiscard]] double human_distance() const { return values.at(kHumanDistance); }
  [[nodiscard]] double human_bearing() const { return values.at(kHumanBearing); }
  [[nodiscard]] double goal_bearing() const { return values.at(kGoalBearing); }
  [[nodiscard]] double human_orientation() const { return values.at(kHumanOrientation); }
  [[nodiscard]] double obstacle_distance(std::size_t i) const {
    return values.at(kFirstObstacle + 2 * i);
  }
  [[nodiscard]] double obstacle_bearing(std::size_t i) const {
    return values.at(kFirstObstacle + 2 * i + 1);
  }
  [[nodiscard]] double min_obstacle_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < obstacle_count(); ++i) best = std::min(best, obstacle_distance(i));
    return best;
  }
  friend bool operator==(const StateVector&, const StateVector&) = default;
};

inline StateVector observe(const Scene& scene, const Pose2D& robot) {
  StateVector s;
  s.values.reserve(StateVector::dimension_for(scene.env.obstacles.size()));
  s.values.push_back(distance(scene.human.position(), robot.position()));
  s.values.push_back(bearing_to(robot, scene.human.position()));
  s.values.push_back(scene.goal == robot.position() ? 0.0 : bearing_to(robot, scene.goal));
  s.values.push_back(wrap_angle(scene.human.heading - robot.heading));
  for (const auto& f : obstacle_features(robot, scene.env)) {
    s.values.push_back(f.distance);
    s.values.push_back(f.bearing);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reward

enum class Source { demo, online };
enum class EpisodeEvent { none, collision, goal, timeout };

inline constexpr double kRewardScale = 5.0;  // c_rew

inline constexpr double compute_reward(EpisodeEvent event, Source source) noexcept {
  switch (event) {
    case EpisodeEvent::collision: return -kRewardScale;
    case EpisodeEvent::goal: return source == Source::demo ? kRewardScale : 0.0;
    case EpisodeEvent::timeout: return -kRewardScale / 2.0;
    case EpisodeEvent::none: return 0.0;
  }
  return 0.0;
}

constexpr std::string_view to_string(Source s) noexcept {
  return s == Source::demo ? "demo" : "online";
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizedState {
  std::vector<double> values;
  bool saturated{false};
};

/// Affine maps between physical quantities and network units. Distances are
/// divided by the environment diagonal (clamped to 1), angles by pi; the
/// action maps v in [0, v_cap] and omega in [-omega_cap, omega_cap] to [-1, 1].
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(double distance_scale, double v_cap, double omega_cap)
      : distance_scale_(distance_scale), v_cap_(v_cap), omega_cap_(omega_cap) {
    require(distance_scale > 0.0 && v_cap > 0.0 && omega_cap > 0.0, ErrorCode::invalid_argument,
            "normalizer: scales must be positive");
  }

  [[nodiscard]] double distance_scale() const noexcept { return distance_scale_; }
  [[nodiscard]] double v_cap() const noexcept { return v_cap_; }
  [[nodiscard]] double omega_cap() const noexcept { return omega_cap_; }

  [[nodiscard]] NormalizedState normalize_state(const StateVector& s) const {
    NormalizedState out;
    out.values.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (is_distance(i)) {
        double d = s.values[i] / distance_scale_;
        if (d > 1.0) {
          d = 1.0;
          out.saturated = true;
        }
        out.values[i] = d;
      } else {
        out.values[i] = s.values[i] / kPi;
      }
    }
    return out;
  }

  [[nodiscard]] StateVector denormalize_state(const std::vector<double>& u) const {
    StateVector s;
    s.values.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      s.values[i] = is_distance(i) ? u[i] * distance_scale_ : u[i] * kPi;
    return s;
  }

  /// Unit pair (clamped to [-1, 1]^2) to physical action.
  [[nodiscard]] Action denormalize_action(double u_v, double u_omega) const noexcept {
    u_v = std::clamp(u_v, -1.0, 1.0);
    u_omega = std::clamp(u_omega, -1.0, 1.0);
    return {0.5 * (u_v + 1.0) * v_cap_, u_omega * omega_cap_};
  }

  [[nodiscard]] std::pair<double, double> normalize_action(const Action& a) const noexcept {
    return {2.0 * a.v / v_cap_ - 1.0, a.omega / omega_cap_};
  }

  /// Index layout shared with StateVector: 0 and every even slot from 4 on are distances.
  [[nodiscard]] static constexpr bool is_distance(std::size_t i) noexcept {
    return i == StateVector::kHumanDistance ||
           (i >= StateVector::kFirstObstacle && (i - StateVector::kFirstObstacle) % 2 == 0);
  }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  double distance_scale_{1.0};
  double v_cap_{0.25};
  double omega_cap_{1.5};
};

// ---------------------------------------------------------------------------
// Episodes

enum class DoneReason { running, goal, collision, timeout };

constexpr std::string_view to_string(DoneReason r) noexcept {
  switch (r) {
    case DoneReason::running: return "running";
    case DoneReason::goal: return "goal";
    case DoneReason::collision: return "collision";
    case DoneReason::timeout: return "timeout";
  }
  return "running";
}

struct EpisodeState {
  int step_count{0};
  int n_ep{300};
  Pose2D robot;
  Scene scene;
  DoneReason done_reason{DoneReason::running};
  bool from_anchor{false};
};

struct StepResult {
  StateVector state;
  double reward{0.0};
  DoneReason done_reason{DoneReason::running};
};

/// Placement distribution for episode starts. With probability p_env an
/// anchor scene is jittered; otherwise the flagged entities are drawn
/// uniformly from free space (unflagged ones come from a random anchor).
struct ResetConfig {
  double p_env{0.25};
  std::vector<Scene> anchors;
  double position_jitter{0.1};
  double heading_jitter{0.2};
  double min_separation{0.5};  // human-robot surface gap
  double min_goal_distance{1.0};
  int max_attempts{1000};
  bool randomize_robot{true};
  bool randomize_human{true};
  bool randomize_goal{true};
};

class SimEnv {
 public:
  SimEnv(EnvironmentSpec env, RadiusConfig radii = {}, DiffDriveParams params = {},
         int n_ep = 300)
      : env_(std::move(env)),
        radii_(radii),
        params_(params),
        n_ep_(n_ep),
        normalizer_(env_.diagonal(), params_.v_cap, params_.omega_cap) {
    require(radii_.valid(), ErrorCode::invalid_argument, "env: radii must be positive");
    require(params_.valid(), ErrorCode::invalid_argument, "env: invalid drive parameters");
    require(n_ep_ > 0, ErrorCode::invalid_argument, "env: n_ep must be positive");
    validate_environment(env_, radii_);
  }

  [[nodiscard]] const EnvironmentSpec& environment() const noexcept { return env_; }
  [[nodiscard]] const RadiusConfig& radii() const noexcept { return radii_; }
  [[nodiscard]] const DiffDriveParams& params() const noexcept { return params_; }
  [[nodiscard]] const Normalizer& normalizer() const noexcept { return normalizer_; }
  [[nodiscard]] int n_ep() const noexcept { return n_ep_; }
  [[nodiscard]] std::size_t state_dim() const noexcept {
    return StateVector::dimension_for(env_.obstacles.size());
  }

  [[nodiscard]] EpisodeState start(const Scene& scene) const {
    validate_scene(scene, radii_);
    EpisodeState ep;
    ep.n_ep = n_ep_;
    ep.robot = scene.robot_start;
    ep.scene = scene;
    ep.from_anchor = scene.anchor >= 0;
    return ep;
  }

  /// Advance one control period. Event order: collision, goal, timeout.
  StepResult step(EpisodeState& ep, const Action& action) const {
    require(ep.done_reason == DoneReason::running, ErrorCode::lifecycle,
            "env_step: episode already finished");
    require(params_.within_caps(action), ErrorCode::invalid_argument,
            "env_step: action outside caps");
    ep.robot = step_exact(ep.robot, action, params_.dt);
    ep.step_count += 1;
    EpisodeEvent event = EpisodeEvent::none;
    if (collision_check(ep.robot, ep.scene, radii_).hit()) {
      event = EpisodeEvent::collision;
      ep.done_reason = DoneReason::collision;
    } else if (distance(ep.robot.position(), ep.scene.goal) < radii_.goal_radius) {
      event = EpisodeEvent::goal;
      ep.done_reason = DoneReason::goal;
    } else if (ep.step_count > ep.n_ep) {
      event = EpisodeEvent::timeout;
      ep.done_reason = DoneReason::timeout;
    }
    return {observe(ep.scene, ep.robot), compute_reward(event, Source::online), ep.done_reason};
  }

  EpisodeState reset(const ResetConfig& cfg, Rng& rng) const {
    require(cfg.p_env >= 0.0 && cfg.p_env <= 1.0, ErrorCode::invalid_argument,
            "env_reset: p_env outside [0, 1]");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool use_anchor = !cfg.anchors.empty() && unit(rng) < cfg.p_env;
    const bool any_random = cfg.randomize_robot || cfg.randomize_human || cfg.randomize_goal;
    require(use_anchor || any_random || !cfg.anchors.empty(), ErrorCode::invalid_argument,
            "env_reset: nothing to place");
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      Scene scene = use_anchor ? jittered_anchor(cfg, rng) : random_scene(cfg, rng);
      if (placement_ok(scene, cfg)) {
        EpisodeState ep = start(scene);
        ep.from_anchor = use_anchor;
        return ep;
      }
    }
    throw Error(ErrorCode::placement, "env_reset: rejection sampling exhausted");
  }

 private:
  [[nodiscard]] bool placement_ok(const Scene& s, const ResetConfig& cfg) const {
    if (!disc_free(s.human.position(), radii_.human_radius, env_)) return false;
    if (collision_check(s.robot_start, s, radii_).hit()) return false;
    if (distance(s.robot_start.position(), s.human.position()) <
        radii_.robot_radius + radii_.human_radius + cfg.min_separation)
      return false;
    if (!disc_free(s.goal, radii_.robot_radius, env_)) return false;
    if (distance(s.goal, s.human.position()) < radii_.robot_radius + radii_.human_radius + 0.05)
      return false;
    return distance(s.goal, s.robot_start.position()) >= cfg.min_goal_distance;
  }

  Vec2 disk_offset(double radius, Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = radius * std::sqrt(unit(rng));
    const double a = kTwoPi * unit(rng);
    return {r * std::cos(a), r * std::sin(a)};
  }

  Scene jittered_anchor(const ResetConfig& cfg, Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, cfg.anchors.size() - 1);
    std::uniform_real_distribution<double> turn(-cfg.heading_jitter, cfg.heading_jitter);
    Scene s = cfg.anchors[pick(rng)];
    const Vec2 dr = disk_offset(cfg.position_jitter, rng);
    s.robot_start = make_pose(s.robot_start.x + dr.x, s.robot_start.y + dr.y,
                              s.robot_start.heading + turn(rng));
    const Vec2 dh = disk_offset(cfg.position_jitter, rng);
    s.human = make_pose(s.human.x + dh.x, s.human.y + dh.y, s.human.heading + turn(rng));
    s.goal = s.goal + disk_offset(cfg.position_jitter, rng);
    return s;
  }

  Scene random_scene(const ResetConfig& cfg, Rng& rng) const {
    Scene s;
    if (!cfg.anchors.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, cfg.anchors.size() - 1);
      s = cfg.anchors[pick(rng)];
    } else {
      s = anchor_scenes(env_).front();
    }
    s.anchor = -1;
    std::uniform_real_distribution<double> heading(-kPi, kPi);
    if (cfg.randomize_human) s.human = make_pose_in(uniform_point(radii_.human_radius, rng), heading(rng));
    if (cfg.randomize_robot) s.robot_start = make_pose_in(uniform_point(radii_.robot_radius, rng), heading(rng));
    if (cfg.randomize_goal) s.goal = uniform_point(radii_.robot_radius, rng);
    return s;
  }

  static Pose2D make_pose_in(Vec2 p, double heading) { return make_pose(p.x, p.y, heading); }

  Vec2 uniform_point(double margin, Rng& rng) const {
    std::uniform_real_distribution<double> ux(env_.bounds.min_corner.x + margin,
                                              env_.bounds.max_corner.x - margin);
    std::uniform_real_distribution<double> uy(env_.bounds.min_corner.y + margin,
                                              env_.bounds.max_corner.y - margin);
    for (int i = 0; i < 1000; ++i) {
      const Vec2 p{ux(rng), uy(rng)};
      if (disc_free(p, margin, env_)) return p;
    }
    throw Error(ErrorCode::placement, "env_reset: no free point found");
  }

  EnvironmentSpec env_;
  RadiusConfig radii_;
  DiffDriveParams params_;
  int n_ep_;
  Normalizer normalizer_;
};

}  // namespace prefnav
