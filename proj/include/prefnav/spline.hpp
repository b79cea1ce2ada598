#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "prefnav/geometry.hpp"

namespace prefnav {

/// Centripetal Catmull-Rom curve through a point sequence. End tangents come
/// from reflected phantom points. Segment i runs from points[i] to points[i+1]
/// with local parameter u in [0, 1].
class CentripetalCurve {
 public:
  CentripetalCurve() = default;
  explicit CentripetalCurve(std::vector<Vec2> points) : points_(std::move(points)) {
    require(points_.size() >= 2, ErrorCode::insufficient_points, "curve: need two points");
  }

  [[nodiscard]] std::size_t segment_count() const noexcept { return points_.size() - 1; }
  [[nodiscard]] const std::vector<Vec2>& points() const noexcept { return points_; }

  [[nodiscard]] Vec2 evaluate(std::size_t seg, double u) const {
    const Knots k = knots(seg);
    const double t = k.t[1] + u * (k.t[2] - k.t[1]);
    return pyramid(k, t).value;
  }

  /// d/du of evaluate(seg, u).
  [[nodiscard]] Vec2 derivative(std::size_t seg, double u) const {
    const Knots k = knots(seg);
    const double t = k.t[1] + u * (k.t[2] - k.t[1]);
    return (k.t[2] - k.t[1]) * pyramid(k, t).slope;
  }

 private:
  struct Knots {
    Vec2 p[4];
    double t[4];
  };
  struct ValueSlope {
    Vec2 value;
    Vec2 slope;
  };

  [[nodiscard]] Vec2 point(std::ptrdiff_t i) const {
    const auto n = static_cast<std::ptrdiff_t>(points_.size());
    if (i < 0) return 2.0 * points_[0] - points_[1];
    if (i >= n) return 2.0 * points_[n - 1] - points_[n - 2];
    return points_[static_cast<std::size_t>(i)];
  }

  [[nodiscard]] Knots knots(std::size_t seg) const {
    Knots k;
    const auto s = static_cast<std::ptrdiff_t>(seg);
    for (int j = 0; j < 4; ++j) k.p[j] = point(s - 1 + j);
    k.t[0] = 0.0;
    for (int j = 1; j < 4; ++j)
      k.t[j] = k.t[j - 1] + std::max(std::sqrt(distance(k.p[j], k.p[j - 1])), 1e-12);
    return k;
  }

  // Barry-Goldman evaluation, differentiated level by level.
  static ValueSlope lerp(const ValueSlope& a, const ValueSlope& b, double ta, double tb,
                         double t) {
    const double w = tb - ta;
    const double alpha = (tb - t) / w, beta = (t - ta) / w;
    return {alpha * a.value + beta * b.value,
            (1.0 / w) * (b.value - a.value) + alpha * a.slope + beta * b.slope};
  }

  static ValueSlope pyramid(const Knots& k, double t) {
    const ValueSlope p0{k.p[0], {}}, p1{k.p[1], {}}, p2{k.p[2], {}}, p3{k.p[3], {}};
    const ValueSlope a1 = lerp(p0, p1, k.t[0], k.t[1], t);
    const ValueSlope a2 = lerp(p1, p2, k.t[1], k.t[2], t);
    const ValueSlope a3 = lerp(p2, p3, k.t[2], k.t[3], t);
    const ValueSlope b1 = lerp(a1, a2, k.t[0], k.t[2], t);
    const ValueSlope b2 = lerp(a2, a3, k.t[1], k.t[3], t);
    return lerp(b1, b2, k.t[1], k.t[2], t);
  }

  std::vector<Vec2> points_;
};

/// Hand-drawn demonstration before processing.
struct RawDemoTrajectory {
  std::vector<Vec2> points;
  std::vector<double> speeds;
  std::string scene_id;
  std::string created_at;
};

struct SplineOptions {
  double smoothing_window{0.05};  // m, corner rounding
  double resolution{0.001};       // m, arc-length table spacing
  double v_min{0.1};
  double v_max{0.25};
};

/// Arc-length parameterized demonstration curve with a speed profile.
/// k in [0, 1] is normalized arc length.
class SplineTrajectory {
 public:
  [[nodiscard]] double total_length() const noexcept { return length_; }
  [[nodiscard]] const CentripetalCurve& curve() const noexcept { return curve_; }

  [[nodiscard]] Vec2 position(double k) const { return position_at(k * length_); }
  [[nodiscard]] double speed(double k) const { return speed_at(k * length_); }

  [[nodiscard]] Vec2 position_at(double s) const {
    const Locator loc = locate(s);
    return curve_.evaluate(loc.seg, loc.u);
  }

  /// Direction of travel at arc length s.
  [[nodiscard]] double heading_at(double s) const {
    const Locator loc = locate(s);
    Vec2 d = curve_.derivative(loc.seg, loc.u);
    if (d.norm() < 1e-12) {
      const double h = 0.5 * resolution_;
      d = position_at(std::min(s + h, length_)) - position_at(std::max(s - h, 0.0));
    }
    return std::atan2(d.y, d.x);
  }

  [[nodiscard]] double speed_at(double s) const {
    const double k = length_ > 0.0 ? std::clamp(s / length_, 0.0, 1.0) : 0.0;
    auto it = std::upper_bound(speed_k_.begin(), speed_k_.end(), k);
    double v;
    if (it == speed_k_.begin()) {
      v = speed_v_.front();
    } else if (it == speed_k_.end()) {
      v = speed_v_.back();
    } else {
      const std::size_t i = static_cast<std::size_t>(it - speed_k_.begin());
      const double k0 = speed_k_[i - 1], k1 = speed_k_[i];
      const double w = k1 > k0 ? (k - k0) / (k1 - k0) : 0.0;
      v = (1.0 - w) * speed_v_[i - 1] + w * speed_v_[i];
    }
    return std::clamp(v, v_min_, v_max_);
  }

  /// Arc length of the curve point closest to `p` within [s_lo, s_hi].
  [[nodiscard]] double project(Vec2 p, double s_lo, double s_hi) const {
    s_lo = std::clamp(s_lo, 0.0, length_);
    s_hi = std::clamp(s_hi, s_lo, length_);
    auto lo = std::lower_bound(table_s_.begin(), table_s_.end(), s_lo);
    auto hi = std::upper_bound(table_s_.begin(), table_s_.end(), s_hi);
    std::size_t i0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(lo - table_s_.begin() - 1, 0));
    std::size_t i1 = std::min(static_cast<std::size_t>(hi - table_s_.begin()), table_s_.size() - 1);
    double best_s = s_lo, best_d = distance(p, position_at(s_lo));
    for (std::size_t i = i0; i + 1 <= i1; ++i) {
      const Vec2 a = table_p_[i], b = table_p_[i + 1];
      const Vec2 ab = b - a;
      const double len2 = ab.dot(ab);
      const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const double d = distance(p, a + t * ab);
      const double s = std::clamp(table_s_[i] + t * (table_s_[i + 1] - table_s_[i]), s_lo, s_hi);
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
    return best_s;
  }

  friend SplineTrajectory fit_spline(const RawDemoTrajectory& raw, const SplineOptions& opt);

 private:
  struct Locator {
    std::size_t seg;
    double u;
  };

  [[nodiscard]] Locator locate(double s) const {
    s = std::clamp(s, 0.0, length_);
    auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
    std::size_t i = it == table_s_.begin() ? 0 : static_cast<std::size_t>(it - table_s_.begin()) - 1;
    if (i + 1 >= table_s_.size()) return {table_seg_.back(), table_u_.back()};
    const double s0 = table_s_[i], s1 = table_s_[i + 1];
    const double w = s1 > s0 ? (s - s0) / (s1 - s0) : 0.0;
    if (table_seg_[i] == table_seg_[i + 1])
      return {table_seg_[i], table_u_[i] + w * (table_u_[i + 1] - table_u_[i])};
    // Sample i + 1 is the start of the next segment (u = 0 there).
    return {table_seg_[i], table_u_[i] + w * (1.0 - table_u_[i])};
  }

  CentripetalCurve curve_;
  double length_{0.0};
  double resolution_{0.001};
  double v_min_{0.1};
  double v_max_{0.25};
  std::vector<double> table_s_;
  std::vector<std::size_t> table_seg_;
  std::vector<double> table_u_;
  std::vector<Vec2> table_p_;
  std::vector<double> speed_k_;
  std::vector<double> speed_v_;
};

namespace detail {

inline std::vector<double> cumulative_length(const std::vector<Vec2>& pts) {
  std::vector<double> s(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) s[i] = s[i - 1] + distance(pts[i], pts[i - 1]);
  return s;
}

inline Vec2 polyline_at(const std::vector<Vec2>& pts, const std::vector<double>& cum, double s) {
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  if (it == cum.begin()) return pts.front();
  if (it == cum.end()) return pts.back();
  const std::size_t i = static_cast<std::size_t>(it - cum.begin());
  const double w = (s - cum[i - 1]) / (cum[i] - cum[i - 1]);
  return (1.0 - w) * pts[i - 1] + w * pts[i];
}

/// Replaces each interior point by the mean of the polyline over a symmetric
/// arc-length window (clipped near the ends). Endpoints stay fixed.
inline std::vector<Vec2> round_corners(const std::vector<Vec2>& pts, double window) {
  if (window <= 0.0 || pts.size() < 3) return pts;
  const auto cum = cumulative_length(pts);
  const double total = cum.back();
  std::vector<Vec2> out = pts;
  constexpr int kSamples = 21;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double half = std::min({0.5 * window, cum[i], total - cum[i]});
    if (half <= 0.0) continue;
    Vec2 acc{};
    for (int j = 0; j < kSamples; ++j) {
      const double s = cum[i] - half + 2.0 * half * j / (kSamples - 1);
      acc = acc + polyline_at(pts, cum, s);
    }
    out[i] = (1.0 / kSamples) * acc;
  }
  return out;
}

}  // namespace detail

struct DedupResult {
  std::vector<Vec2> points;
  std::vector<double> speeds;
};

/// Drops consecutive duplicate points together with their speed samples.
inline DedupResult dedup_points(const std::vector<Vec2>& points, const std::vector<double>& speeds) {
  require(points.size() == speeds.size(), ErrorCode::invalid_argument,
          "trajectory: speeds must align with points");
  DedupResult out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!out.points.empty() && distance(out.points.back(), points[i]) < 1e-9) continue;
    out.points.push_back(points[i]);
    out.speeds.push_back(speeds[i]);
  }
  return out;
}

inline SplineTrajectory fit_spline(const RawDemoTrajectory& raw, const SplineOptions& opt = {}) {
  for (const auto& p : raw.points)
    require(std::isfinite(p.x) && std::isfinite(p.y), ErrorCode::invalid_argument,
            "fit_spline: non-finite point");
  const DedupResult d = dedup_points(raw.points, raw.speeds);
  require(d.points.size() >= 4, ErrorCode::insufficient_points,
          "fit_spline: need at least 4 distinct points, got " + std::to_string(d.points.size()));
  const double raw_length = detail::cumulative_length(d.points).back();
  require(raw_length > 1e-6, ErrorCode::degenerate_geometry, "fit_spline: zero-length trajectory");

  SplineTrajectory sp;
  sp.resolution_ = opt.resolution;
  sp.v_min_ = opt.v_min;
  sp.v_max_ = opt.v_max;
  sp.curve_ = CentripetalCurve(detail::round_corners(d.points, opt.smoothing_window));

  const auto& knots = sp.curve_.points();
  std::vector<double> knot_s{0.0};
  double s = 0.0;
  Vec2 prev = knots.front();
  for (std::size_t seg = 0; seg < sp.curve_.segment_count(); ++seg) {
    const double chord = distance(knots[seg], knots[seg + 1]);
    const auto n = static_cast<std::size_t>(std::max(4.0, std::ceil(chord / opt.resolution)));
    for (std::size_t j = 0; j < n; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(n);
      const Vec2 p = j == 0 ? knots[seg] : sp.curve_.evaluate(seg, u);
      s += distance(p, prev);
      prev = p;
      sp.table_s_.push_back(s);
      sp.table_seg_.push_back(seg);
      sp.table_u_.push_back(u);
      sp.table_p_.push_back(p);
    }
    if (seg + 1 < sp.curve_.segment_count()) {
      // the next segment's j == 0 sample supplies this knot
      knot_s.push_back(s + distance(knots[seg + 1], prev));
    }
  }
  const Vec2 last = knots.back();
  s += distance(last, prev);
  sp.table_s_.push_back(s);
  sp.table_seg_.push_back(sp.curve_.segment_count() - 1);
  sp.table_u_.push_back(1.0);
  sp.table_p_.push_back(last);
  knot_s.push_back(s);
  sp.length_ = s;

  sp.speed_k_.reserve(knot_s.size());
  for (double ks : knot_s) sp.speed_k_.push_back(ks / s);
  sp.speed_v_ = d.speeds;
  return sp;
}

}  // namespace prefnav
