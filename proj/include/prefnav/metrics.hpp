#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prefnav/rollout.hpp"

namespace prefnav {

namespace detail {

/// Pose polyline used by the path metrics. Goal-reaching traces end inside the
/// goal radius, so the goal point is appended to close the path at the goal.
inline std::vector<Vec2> metric_path(const RolloutTrace& trace) {
  std::vector<Vec2> pts;
  pts.reserve(trace.rows.size() + 1);
  for (const auto& r : trace.rows) pts.push_back(r.pose.position());
  if (trace.outcome == DoneReason::goal && !pts.empty() && distance(pts.back(), trace.scene.goal) > 1e-12)
    pts.push_back(trace.scene.goal);
  return pts;
}

inline double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

inline double signed_area(const std::vector<Vec2>& ring) {
  double a = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) a += ring[i].cross(ring[(i + 1) % ring.size()]);
  return 0.5 * a;
}

/// Intersection of segments ab and cd, excluding a itself. Landing exactly on
/// cd at b counts, so a path passing through an earlier vertex is still cut.
inline std::optional<std::pair<Vec2, double>> segment_intersection(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const Vec2 r = b - a, s = d - c;
  const double den = r.cross(s);
  if (std::abs(den) < 1e-15) return std::nullopt;
  const double t = (c - a).cross(s) / den;
  const double u = (c - a).cross(r) / den;
  if (t <= 1e-12 || t > 1.0 + 1e-12 || u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  return std::make_pair(a + t * r, t);
}

}  // namespace detail

/// Sum of |area| over the loops of a closed, possibly self-crossing ring.
/// Each crossing cuts off the loop behind it.
inline double loop_area(const std::vector<Vec2>& ring) {
  if (ring.size() < 3) return 0.0;
  std::vector<Vec2> path(ring);
  path.push_back(ring.front());
  std::vector<Vec2> chain{path.front()};
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    Vec2 next = path[i];
    bool cut = true;
    while (cut) {
      cut = false;
      const Vec2 cur = chain.back();
      // earliest crossing along cur -> next against non-adjacent chain segments
      double best_t = 2.0;
      std::size_t best_k = 0;
      Vec2 best_p{};
      for (std::size_t k = 0; k + 2 < chain.size(); ++k) {
        if (auto hit = detail::segment_intersection(cur, next, chain[k], chain[k + 1]); hit && hit->second < best_t) {
          best_t = hit->second;
          best_k = k;
          best_p = hit->first;
        }
      }
      if (best_t < 2.0) {
        std::vector<Vec2> loop{best_p};
        loop.insert(loop.end(), chain.begin() + static_cast<std::ptrdiff_t>(best_k) + 1, chain.end());
        total += std::abs(detail::signed_area(loop));
        chain.resize(best_k + 1);
        chain.push_back(best_p);
        cut = true;
      }
    }
    chain.push_back(next);
  }
  total += std::abs(detail::signed_area(chain));
  return total;
}

/// Path length over the straight start-goal distance.
inline double relative_path_length(const RolloutTrace& trace) {
  require(trace.rows.size() >= 2, ErrorCode::insufficient_points, "relative_path_length: need >= 2 poses");
  const double linear = distance(trace.rows.front().pose.position(), trace.scene.goal);
  require(linear > 1e-9, ErrorCode::degenerate_geometry, "relative_path_length: start coincides with goal");
  return detail::polyline_length(detail::metric_path(trace)) / linear;
}

/// Minimum center-to-center distance to the human, over the sampled poses and
/// the midpoint of each executed arc.
inline double min_human_distance(const RolloutTrace& trace, const Pose2D& human) {
  require(!trace.rows.empty(), ErrorCode::empty_sequence, "min_human_distance: empty trace");
  const Vec2 h = human.position();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& r = trace.rows[i];
    best = std::min(best, distance(r.pose.position(), h));
    if (i + 1 < trace.rows.size())
      best = std::min(best, distance(step_exact(r.pose, r.action, 0.5 * trace.dt).position(), h));
  }
  return best;
}

inline double min_human_distance(const RolloutTrace& trace) { return min_human_distance(trace, trace.scene.human); }

/// Area enclosed by the path and the straight start-goal segment.
inline double path_area(const RolloutTrace& trace) {
  require(trace.rows.size() >= 2, ErrorCode::insufficient_points, "path_area: need >= 2 poses");
  return loop_area(detail::metric_path(trace));
}

struct SpeedSample {
  double path_distance{0.0};
  double v{0.0};
};

/// Commanded v per step, indexed by the path length travelled before it.
inline std::vector<SpeedSample> speed_profile(const RolloutTrace& trace) {
  require(!trace.rows.empty(), ErrorCode::empty_sequence, "speed_profile: empty trace");
  std::vector<SpeedSample> out;
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < trace.rows.size(); ++i) {
    out.push_back({s, trace.rows[i].action.v});
    s += distance(trace.rows[i].pose.position(), trace.rows[i + 1].pose.position());
  }
  return out;
}

inline double mean_speed(const RolloutTrace& trace) {
  const auto p = speed_profile(trace);
  if (p.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& x : p) acc += x.v;
  return acc / static_cast<double>(p.size());
}

/// Mean distance from the robot center to the nearest obstacle over the trace poses.
inline double mean_wall_clearance(const RolloutTrace& trace) {
  require(!trace.rows.empty(), ErrorCode::empty_sequence, "mean_wall_clearance: empty trace");
  double acc = 0.0;
  for (const auto& r : trace.rows) acc += nearest_obstacle_distance(r.pose.position(), trace.scene.env);
  return acc / static_cast<double>(trace.rows.size());
}

/// Mean commanded v split by whether the pose is within `radius` of the human.
struct SpeedSplit {
  double near{0.0};
  double far{0.0};
  int near_count{0};
  int far_count{0};
};

inline SpeedSplit speed_near_human(const std::vector<RolloutTrace>& traces, double radius) {
  SpeedSplit out;
  double near = 0.0, far = 0.0;
  for (const auto& t : traces)
    for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
      if (distance(t.rows[i].pose.position(), t.scene.human.position()) < radius) {
        near += t.rows[i].action.v;
        ++out.near_count;
      } else {
        far += t.rows[i].action.v;
        ++out.far_count;
      }
    }
  if (out.near_count > 0) out.near = near / out.near_count;
  if (out.far_count > 0) out.far = far / out.far_count;
  return out;
}

// ---------------------------------------------------------------------------
// Reference controller

struct GreedyParams {
  double k_p{2.0};
  double slow_distance{0.6};
  double v_slow{0.05};
};

/// Turns toward the goal proportionally; slows linearly near obstacles or the human.
inline Action greedy_baseline(const StateVector& s, const DiffDriveParams& params = {},
                              const GreedyParams& g = {}) {
  const double omega = std::clamp(g.k_p * s.goal_bearing(), -params.omega_cap, params.omega_cap);
  const double d = std::min(s.min_obstacle_distance(), s.human_distance());
  double v = params.v_cap;
  if (d < g.slow_distance) v = g.v_slow + (params.v_cap - g.v_slow) * std::max(0.0, d) / g.slow_distance;
  return {v, omega};
}

inline Policy greedy_policy(const DiffDriveParams& params = {}, const GreedyParams& g = {}) {
  return [params, g](const StateVector& s) { return greedy_baseline(s, params, g); };
}

// ---------------------------------------------------------------------------
// Reports

struct TraceMetrics {
  std::string label;
  std::string scene;
  DoneReason outcome{DoneReason::running};
  int steps{0};
  double relative_path_length{0.0};
  double min_human_distance{0.0};
  double path_area{0.0};
  double mean_speed{0.0};
  double mean_wall_clearance{0.0};
};

inline TraceMetrics measure(const RolloutTrace& t, const std::string& label) {
  TraceMetrics m;
  m.label = label;
  m.scene = scene_id(t.scene);
  m.outcome = t.outcome;
  m.steps = static_cast<int>(t.steps());
  m.relative_path_length = relative_path_length(t);
  m.min_human_distance = min_human_distance(t);
  m.path_area = path_area(t);
  m.mean_speed = mean_speed(t);
  m.mean_wall_clearance = mean_wall_clearance(t);
  return m;
}

struct Stat {
  double mean{0.0};
  double stddev{0.0};
};

inline Stat mean_std(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(xs.size()));
  return s;
}

struct PolicyAggregate {
  std::string label;
  int episodes{0};
  double success_rate{0.0};
  double collision_rate{0.0};
  Stat relative_path_length, min_human_distance, path_area, mean_speed, mean_wall_clearance;
};

struct MetricsReport {
  std::vector<TraceMetrics> rows;
  std::vector<PolicyAggregate> aggregates;  // one per label, in first-seen order
};

using LabeledTraces = std::vector<std::pair<std::string, std::vector<RolloutTrace>>>;

inline MetricsReport build_report(const LabeledTraces& policies) {
  MetricsReport rep;
  for (const auto& [label, traces] : policies) {
    require(!traces.empty(), ErrorCode::invalid_argument, "report: policy '" + label + "' has no traces");
    PolicyAggregate agg;
    agg.label = label;
    std::vector<double> rpl, mhd, area, spd, wall;
    for (const auto& t : traces) {
      const TraceMetrics m = measure(t, label);
      rpl.push_back(m.relative_path_length);
      mhd.push_back(m.min_human_distance);
      area.push_back(m.path_area);
      spd.push_back(m.mean_speed);
      wall.push_back(m.mean_wall_clearance);
      agg.success_rate += m.outcome == DoneReason::goal;
      agg.collision_rate += m.outcome == DoneReason::collision;
      rep.rows.push_back(m);
    }
    agg.episodes = static_cast<int>(traces.size());
    agg.success_rate /= agg.episodes;
    agg.collision_rate /= agg.episodes;
    agg.relative_path_length = mean_std(rpl);
    agg.min_human_distance = mean_std(mhd);
    agg.path_area = mean_std(area);
    agg.mean_speed = mean_std(spd);
    agg.mean_wall_clearance = mean_std(wall);
    rep.aggregates.push_back(agg);
  }
  return rep;
}

inline std::string metrics_csv(const MetricsReport& rep) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "# min_human_distance is center-to-center\n";
  os << "label,scene,outcome,steps,relative_path_length,min_human_distance,path_area,mean_speed,mean_wall_clearance\n";
  for (const auto& m : rep.rows)
    os << m.label << ',' << m.scene << ',' << to_string(m.outcome) << ',' << m.steps << ','
       << m.relative_path_length << ',' << m.min_human_distance << ',' << m.path_area << ',' << m.mean_speed
       << ',' << m.mean_wall_clearance << '\n';
  return os.str();
}

inline std::string summary_csv(const MetricsReport& rep) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "label,episodes,success_rate,collision_rate,relative_path_length_mean,relative_path_length_std,"
        "min_human_distance_mean,min_human_distance_std,path_area_mean,path_area_std,mean_speed_mean,"
        "mean_speed_std,mean_wall_clearance_mean,mean_wall_clearance_std\n";
  for (const auto& a : rep.aggregates)
    os << a.label << ',' << a.episodes << ',' << a.success_rate << ',' << a.collision_rate << ','
       << a.relative_path_length.mean << ',' << a.relative_path_length.stddev << ',' << a.min_human_distance.mean
       << ',' << a.min_human_distance.stddev << ',' << a.path_area.mean << ',' << a.path_area.stddev << ','
       << a.mean_speed.mean << ',' << a.mean_speed.stddev << ',' << a.mean_wall_clearance.mean << ','
       << a.mean_wall_clearance.stddev << '\n';
  return os.str();
}

/// Top view of the environment with one polyline per trace, colored by label.
inline std::string render_svg(const EnvironmentSpec& env, const LabeledTraces& policies, double px_per_m = 100.0) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const ObstacleRect& b = env.bounds;
  const double w = b.width() * px_per_m, h = b.height() * px_per_m;
  auto X = [&](double x) { return (x - b.min_corner.x) * px_per_m; };
  auto Y = [&](double y) { return (b.max_corner.y - y) * px_per_m; };
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
     << w << ' ' << h << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  for (const auto& o : env.obstacles)
    os << "<rect class=\"obstacle\" x=\"" << X(o.min_corner.x) << "\" y=\"" << Y(o.max_corner.y) << "\" width=\""
       << o.width() * px_per_m << "\" height=\"" << o.height() * px_per_m << "\" fill=\"#555\"/>\n";
  std::size_t color = 0;
  int index = 0;
  for (const auto& [label, traces] : policies) {
    const char* c = palette[color++ % std::size(palette)];
    os << "<g class=\"policy\" data-label=\"" << label << "\" stroke=\"" << c << "\" fill=\"none\">\n";
    for (const auto& t : traces) {
      os << "<polyline class=\"trace\" data-index=\"" << index++ << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& r : t.rows) os << X(r.pose.x) << ',' << Y(r.pose.y) << ' ';
      os << "\"/>\n";
      os << "<circle class=\"human\" cx=\"" << X(t.scene.human.x) << "\" cy=\"" << Y(t.scene.human.y) << "\" r=\"3\" fill=\""
         << c << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace prefnav
