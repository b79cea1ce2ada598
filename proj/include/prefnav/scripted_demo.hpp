#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "prefnav/demo_pipeline.hpp"

namespace prefnav {

/// Synthetic demonstrators standing in for human users.
///  wide_curve:  smooth arc with >= 1 m clearance to the human at v_max.
///  wall_follow: detour along the wall opposite the human at ~0.35 m clearance.
///  speed_dip:   near-straight pass that slows to v_min within 1.2 m of the human.
enum class DemoStyle { wide_curve, wall_follow, speed_dip };

constexpr std::string_view to_string(DemoStyle s) noexcept {
  switch (s) {
    case DemoStyle::wide_curve: return "wide_curve";
    case DemoStyle::wall_follow: return "wall_follow";
    case DemoStyle::speed_dip: return "speed_dip";
  }
  return "wide_curve";
}

inline std::optional<DemoStyle> parse_demo_style(std::string_view s) {
  for (DemoStyle d : {DemoStyle::wide_curve, DemoStyle::wall_follow, DemoStyle::speed_dip})
    if (to_string(d) == s) return d;
  return std::nullopt;
}

inline constexpr double kWideClearance = 1.0;
inline constexpr double kWallClearance = 0.35;
inline constexpr double kSlowZone = 1.2;

namespace detail {

/// Frame along the start-goal line: t in [0, 1] along, offset along the left normal.
struct LineFrame {
  Vec2 origin, along, normal;
  double length;

  LineFrame(Vec2 a, Vec2 b) : origin(a) {
    const Vec2 d = b - a;
    length = d.norm();
    require(length > 0.5, ErrorCode::generation, "scripted_demo: start and goal too close");
    along = (1.0 / length) * d;
    normal = {-along.y, along.x};
  }
  [[nodiscard]] Vec2 at(double t, double offset) const {
    return origin + (t * length) * along + offset * normal;
  }
  [[nodiscard]] double t_of(Vec2 p) const { return (p - origin).dot(along) / length; }
  [[nodiscard]] double offset_of(Vec2 p) const { return (p - origin).dot(normal); }
};

/// Single bump peaking at t_peak: sin^power over a piecewise-linear warp.
/// power 2 leaves the line tangentially; power 1 gives a flatter, wider top.
inline double bump(double t, double t_peak, double power) {
  const double w = t < t_peak ? 0.5 * t / t_peak : 0.5 + 0.5 * (t - t_peak) / (1.0 - t_peak);
  return std::pow(std::sin(kPi * w), power);
}

using Path = std::function<Vec2(double)>;

inline std::vector<Vec2> sample_path(const Path& path, int n) {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) out.push_back(path(static_cast<double>(i) / n));
  return out;
}

inline double min_distance_to(const std::vector<Vec2>& pts, Vec2 q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, distance(p, q));
  return best;
}

inline bool path_clear(const std::vector<Vec2>& pts, const Scene& scene, const RadiusConfig& radii,
                       double wall_margin) {
  RadiusConfig inflated = radii;
  inflated.robot_radius += wall_margin;
  for (const auto& p : pts)
    if (collision_check(p, scene.env, scene.human, inflated).hit()) return false;
  return true;
}

/// Smallest bump amplitude on `side` that keeps `clearance` to the human.
inline double amplitude_for_clearance(const LineFrame& f, double t_peak, double power, double side,
                                      Vec2 human, double clearance) {
  auto min_dist = [&](double amp) {
    return min_distance_to(
        sample_path([&](double t) { return f.at(t, side * amp * bump(t, t_peak, power)); }, 400),
                           human);
  };
  double lo = 0.0, hi = 4.0;
  if (min_dist(lo) >= clearance) return 0.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (min_dist(mid) >= clearance ? hi : lo) = mid;
  }
  return hi;
}

/// Space between the human and the nearest obstacle along +-normal.
inline double room_on_side(const LineFrame& f, const Scene& scene, double side) {
  const Vec2 h = scene.human.position();
  double d = 0.0;
  while (d < 20.0 && scene.env.bounds.contains(h + (side * d) * f.normal) &&
         nearest_obstacle_distance(h + (side * d) * f.normal, scene.env) > 1e-3)
    d += 0.01;
  return d;
}

/// Chaikin corner cutting on an open polyline (endpoints kept).
inline std::vector<Vec2> chaikin(std::vector<Vec2> pts, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    std::vector<Vec2> next{pts.front()};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      next.push_back(0.75 * pts[i] + 0.25 * pts[i + 1]);
      next.push_back(0.25 * pts[i] + 0.75 * pts[i + 1]);
    }
    next.push_back(pts.back());
    pts = std::move(next);
  }
  return pts;
}

/// Resamples a dense polyline at (approximately) fixed arc-length spacing.
inline std::vector<Vec2> resample(const std::vector<Vec2>& dense, double spacing) {
  const auto cum = cumulative_length(dense);
  const double total = cum.back();
  const int n = std::max(4, static_cast<int>(std::round(total / spacing)));
  std::vector<Vec2> out;
  for (int i = 0; i <= n; ++i) out.push_back(polyline_at(dense, cum, total * i / n));
  return out;
}

}  // namespace detail

struct ScriptedDemoOptions {
  double point_spacing{0.12};  // m
  double jitter{0.005};        // m per coordinate, uniform
  RadiusConfig radii{};
  DiffDriveParams params{};
};

inline RawDemoTrajectory scripted_demo(DemoStyle style, const Scene& scene, std::uint64_t rng_seed,
                                       const ScriptedDemoOptions& opt = {}) {
  using namespace detail;
  validate_scene(scene, opt.radii);
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const LineFrame f(scene.robot_start.position(), scene.goal);
  const Vec2 human = scene.human.position();
  const double t_peak = std::clamp(f.t_of(human), 0.25, 0.75);
  const double human_offset = f.offset_of(human);
  constexpr double kWallMargin = 0.05;

  std::vector<Vec2> dense;
  auto try_side = [&](double side, double clearance, double power) -> bool {
    const double amp = amplitude_for_clearance(f, t_peak, power, side, human, clearance);
    auto pts = sample_path([&](double t) { return f.at(t, side * amp * bump(t, t_peak, power)); }, 600);
    if (!path_clear(pts, scene, opt.radii, kWallMargin)) return false;
    dense = std::move(pts);
    return true;
  };
  auto side_order = [&](bool prefer_view) {
    const double room_left = room_on_side(f, scene, 1.0), room_right = room_on_side(f, scene, -1.0);
    double first = room_left >= room_right ? 1.0 : -1.0;
    if (prefer_view) {
      const Vec2 facing{std::cos(scene.human.heading), std::sin(scene.human.heading)};
      const double view = facing.dot(f.normal);
      if (std::abs(view) > 0.5) first = view > 0.0 ? 1.0 : -1.0;
    }
    return std::array<double, 2>{first, -first};
  };

  switch (style) {
    case DemoStyle::wide_curve: {
      const double preferred = kWideClearance + 0.1 + 0.15 * unit(rng);
      bool ok = false;
      for (double clearance : {preferred, kWideClearance + 0.03}) {
        for (double side : side_order(true))
          if ((ok = try_side(side, clearance, 1.0))) break;
        if (ok) break;
      }
      require(ok, ErrorCode::generation, "scripted_demo: no collision-free wide curve");
      break;
    }
    case DemoStyle::speed_dip: {
      const double clearance = 0.75 + 0.1 * unit(rng);
      const double away = human_offset >= 0.0 ? -1.0 : 1.0;
      bool ok = false;
      for (double side : {away, -away})
        if ((ok = try_side(side, clearance, 2.0))) break;
      require(ok, ErrorCode::generation, "scripted_demo: no collision-free speed-dip path");
      break;
    }
    case DemoStyle::wall_follow: {
      const double clearance = kWallClearance - 0.02 + 0.02 * unit(rng);
      bool ok = false;
      const double away = human_offset >= 0.0 ? -1.0 : 1.0;
      for (double side : {away, -away}) {
        // lateral offset where the nearest wall is `clearance` away, probed at the human
        const double t_mid = t_peak;
        double lo = 0.0, hi = 0.0;
        while (hi < 20.0 && nearest_obstacle_distance(f.at(t_mid, side * hi), scene.env) > clearance &&
               scene.env.bounds.contains(f.at(t_mid, side * hi)))
          hi += 0.01;
        lo = std::max(0.0, hi - 0.01);
        for (int i = 0; i < 40; ++i) {
          const double mid = 0.5 * (lo + hi);
          (nearest_obstacle_distance(f.at(t_mid, side * mid), scene.env) > clearance ? lo : hi) = mid;
        }
        const double off = side * lo;
        const double ramp = std::min(0.25, 0.4 / f.length);
        std::vector<Vec2> corners{f.at(0.0, 0.0), f.at(ramp, off), f.at(1.0 - ramp, off), f.at(1.0, 0.0)};
        auto rounded = chaikin(corners, 5);
        std::vector<Vec2> pts;
        for (std::size_t i = 0; i + 1 < rounded.size(); ++i)
          for (int j = 0; j < 20; ++j)
            pts.push_back(rounded[i] + (j / 20.0) * (rounded[i + 1] - rounded[i]));
        pts.push_back(rounded.back());
        if (!path_clear(pts, scene, opt.radii, 0.0)) continue;
        if (min_distance_to(pts, human) < opt.radii.robot_radius + opt.radii.human_radius + 0.2) continue;
        dense = std::move(pts);
        ok = true;
        break;
      }
      require(ok, ErrorCode::generation, "scripted_demo: no collision-free wall-following path");
      break;
    }
  }

  RawDemoTrajectory raw;
  raw.scene_id = scene_id(scene);
  raw.created_at = "synthetic-" + std::to_string(rng_seed);
  std::uniform_real_distribution<double> jit(-opt.jitter, opt.jitter);
  auto pts = resample(dense, opt.point_spacing);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec2 p = pts[i];
    if (i > 0 && i + 1 < pts.size()) p = p + Vec2{jit(rng), jit(rng)};
    raw.points.push_back(p);
    double v = opt.params.v_max_demo;
    if (style == DemoStyle::speed_dip) {
      const double d = distance(p, human);
      const double w = std::clamp((d - kSlowZone) / 0.3, 0.0, 1.0);
      v = opt.params.v_min_demo + w * (opt.params.v_max_demo - opt.params.v_min_demo);
    }
    raw.speeds.push_back(v);
  }

  SplineOptions so;
  so.v_min = opt.params.v_min_demo;
  so.v_max = opt.params.v_max_demo;
  const SplineTrajectory spline = fit_spline(raw, so);
  require(validate_demo(spline, scene, opt.radii).ok(), ErrorCode::generation,
          "scripted_demo: generated trajectory collides");
  return raw;
}

}  // namespace prefnav
