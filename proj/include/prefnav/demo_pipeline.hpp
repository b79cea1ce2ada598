#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prefnav/diffdrive.hpp"
#include "prefnav/sim_env.hpp"
#include "prefnav/spline.hpp"

namespace prefnav {

struct ControlStep {
  Pose2D pose;
  Action action;
  bool clamped{false};
};

/// Poses at dt spacing with the command applied at each; end_pose is the pose
/// reached after the last command.
struct ControlSequence {
  std::vector<ControlStep> steps;
  Pose2D end_pose;

  [[nodiscard]] std::size_t size() const noexcept { return steps.size(); }
  [[nodiscard]] bool any_clamped() const noexcept {
    for (const auto& s : steps)
      if (s.clamped) return true;
    return false;
  }
  [[nodiscard]] std::vector<Pose2D> poses() const {
    std::vector<Pose2D> out;
    out.reserve(steps.size() + 1);
    for (const auto& s : steps) out.push_back(s.pose);
    out.push_back(end_pose);
    return out;
  }
};

/// Walks the spline in steps of arc length v(k) * dt starting at arc length
/// `start_s`. The turn of step i is the heading change between consecutive
/// spline chords, blended with the turn that would put the simulated pose
/// exactly on the next spline location. Pure position tracking alone leaves an
/// undamped alternating heading error; the blend weight 8/9 places both
/// error modes at -1/3 per step. A trailing remainder longer than 1 mm gets
/// one shorter step.
inline ControlSequence extract_controls(const SplineTrajectory& spline,
                                        const DiffDriveParams& params, double start_s = 0.0) {
  const double length = spline.total_length();
  const double dt = params.dt;
  ControlSequence seq;
  const Vec2 p0 = spline.position_at(start_s);
  const double tangent = wrap_angle(spline.heading_at(start_s));
  Pose2D pose{p0.x, p0.y, tangent};
  double s = start_s;
  Vec2 here = p0;
  // virtual previous chord mirrored about the start tangent
  std::optional<double> prev_chord;
  constexpr double kTrack = 8.0 / 9.0;
  const auto max_steps =
      static_cast<std::size_t>(std::ceil(length / (params.v_min_demo * dt))) * 2 + 16;
  while (seq.steps.size() < max_steps) {
    double v = spline.speed_at(s);
    double dd = v * dt;
    const double remaining = length - s;
    if (remaining < dd - 1e-9) {
      if (seq.steps.empty() || remaining <= 1e-3) break;
      dd = remaining;
      v = dd / dt;
    }
    const double s_next = std::min(s + dd, length);
    const Vec2 target = spline.position_at(s_next);
    const Vec2 chord = target - here;
    const double chord_heading = chord.norm() > 1e-12 ? std::atan2(chord.y, chord.x) : tangent;
    const double feed = prev_chord ? wrap_angle(chord_heading - *prev_chord)
                                   : 2.0 * wrap_angle(chord_heading - tangent);
    const Vec2 to_target = target - pose.position();
    const double track = to_target.norm() > 1e-12
                             ? 2.0 * wrap_angle(std::atan2(to_target.y, to_target.x) - pose.heading)
                             : feed;
    const SegmentAction seg = action_from_segment(dd, feed + kTrack * (track - feed), v, params);
    seq.steps.push_back({pose, seg.action, seg.clamped});
    pose = step_exact(pose, seg.action, dt);
    prev_chord = chord_heading;
    here = target;
    s = s_next;
  }
  require(!seq.steps.empty(), ErrorCode::empty_sequence,
          "extract_controls: spline shorter than one control step");
  seq.end_pose = pose;
  return seq;
}

struct Transition {
  StateVector s;
  Action a;
  double r{0.0};
  StateVector s_next;
  bool done{false};
  Source source{Source::online};

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Executes a demonstration command sequence in `scene`. Intermediate steps
/// carry no reward; the last step ends the episode at the (finalized) goal.
inline std::vector<Transition> rollout_demo(const ControlSequence& controls, const Scene& scene,
                                            const SimEnv& env) {
  require(!controls.steps.empty(), ErrorCode::empty_sequence, "rollout_demo: no controls");
  std::vector<Transition> out;
  out.reserve(controls.size());
  Pose2D pose = controls.steps.front().pose;
  StateVector s = observe(scene, pose);
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const Action a = controls.steps[i].action;
    pose = step_exact(pose, a, env.params().dt);
    if (collision_check(pose, scene, env.radii()).hit())
      throw Error(ErrorCode::collision,
                  "rollout_demo: collision at step " + std::to_string(i) + " of a validated demo");
    const bool last = i + 1 == controls.size();
    StateVector s_next = observe(scene, pose);
    out.push_back({s, a, compute_reward(last ? EpisodeEvent::goal : EpisodeEvent::none, Source::demo),
                   s_next, last, Source::demo});
    s = std::move(s_next);
  }
  return out;
}

struct FinalizedScene {
  Scene scene;
  double goal_displacement{0.0};
};

/// Moves the goal to the end of the demonstrated trajectory.
inline FinalizedScene finalize_goal(const Scene& scene, const SplineTrajectory& spline) {
  FinalizedScene out{scene, 0.0};
  out.scene.goal = spline.position(1.0);
  out.goal_displacement = distance(out.scene.goal, scene.goal);
  return out;
}

struct DemoValidation {
  std::optional<double> collision_k;  // first colliding normalized arc length
  CollisionKind kind{CollisionKind::none};

  [[nodiscard]] bool ok() const noexcept { return !collision_k.has_value(); }
};

/// Sweeps the robot disc along the spline at 1 cm arc-length resolution.
inline DemoValidation validate_demo(const SplineTrajectory& spline, const Scene& scene,
                                    const RadiusConfig& radii, double start_s = 0.0) {
  constexpr double kStep = 0.01;
  const double length = spline.total_length();
  for (double s = start_s;; s += kStep) {
    const double sc = std::min(s, length);
    const CollisionResult hit = collision_check(spline.position_at(sc), scene.env, scene.human, radii);
    if (hit.hit()) return {sc / length, hit.kind};
    if (sc >= length) break;
  }
  return {};
}

struct AugmentConfig {
  int n_aug{15};
  double max_shift{0.05};
};

struct AugmentResult {
  std::vector<std::vector<Transition>> variants;
  std::vector<int> skipped;  // variant indices dropped because the shifted start collided
  double shift_total{0.0};
};

/// Shifts the start j * shift_total / n_aug along the spline for j = 0..n_aug-1
/// (shift_total = v(k0) * dt) and rolls each variant out. Variant 0 is the
/// unshifted demonstration.
inline AugmentResult augment_demo(const SplineTrajectory& spline, const Scene& scene,
                                  const AugmentConfig& cfg, const SimEnv& env) {
  require(cfg.n_aug >= 1, ErrorCode::invalid_argument, "augment_demo: n_aug must be >= 1");
  AugmentResult out;
  out.shift_total = spline.speed(0.0) * env.params().dt;
  require(out.shift_total <= cfg.max_shift + 1e-12, ErrorCode::invalid_argument,
          "augment_demo: start shift exceeds configured maximum");
  for (int j = 0; j < cfg.n_aug; ++j) {
    const double s0 = j * out.shift_total / cfg.n_aug;
    try {
      if (!validate_demo(spline, scene, env.radii(), s0).ok())
        throw Error(ErrorCode::collision, "shifted start collides");
      out.variants.push_back(rollout_demo(extract_controls(spline, env.params(), s0), scene, env));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::collision) throw;
      out.skipped.push_back(j);
    }
  }
  return out;
}

/// Checks a raw drawn trajectory against the demonstration speed range and
/// the environment bounds.
inline void validate_raw(const RawDemoTrajectory& raw, const EnvironmentSpec& env,
                         const DiffDriveParams& params) {
  require(raw.points.size() == raw.speeds.size(), ErrorCode::invalid_argument,
          "trajectory: speeds must align with points");
  for (double v : raw.speeds)
    require(v >= params.v_min_demo - 1e-9 && v <= params.v_max_demo + 1e-9,
            ErrorCode::invalid_argument, "trajectory: speed outside demonstration range");
  for (const auto& p : raw.points)
    require(env.bounds.contains(p), ErrorCode::invalid_argument, "trajectory: point outside bounds");
}

struct ProcessedDemo {
  SplineTrajectory spline;
  FinalizedScene finalized;
  AugmentResult augmented;
};

/// fit -> validate -> finalize goal -> augment -> roll out.
inline ProcessedDemo process_demo(const RawDemoTrajectory& raw, const Scene& scene,
                                  const SimEnv& env, const AugmentConfig& cfg = {}) {
  validate_raw(raw, scene.env, env.params());
  SplineOptions opt;
  opt.v_min = env.params().v_min_demo;
  opt.v_max = env.params().v_max_demo;
  ProcessedDemo out{fit_spline(raw, opt), {}, {}};
  const DemoValidation v = validate_demo(out.spline, scene, env.radii());
  if (!v.ok())
    throw Error(ErrorCode::collision, "demo collides at k = " + std::to_string(*v.collision_k));
  out.finalized = finalize_goal(scene, out.spline);
  out.augmented = augment_demo(out.spline, out.finalized.scene, cfg, env);
  require(!out.augmented.variants.empty(), ErrorCode::collision,
          "demo: every augmentation variant collided");
  return out;
}

}  // namespace prefnav
