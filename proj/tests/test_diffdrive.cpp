#include <gtest/gtest.h>

#include <random>

#include "prefnav/diffdrive.hpp"

using namespace prefnav;

namespace {

// Euler with the heading sampled at the substep midpoint.
Pose2D euler(Pose2D p, Action a, double dt, int substeps) {
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    const double mid = p.heading + 0.5 * a.omega * h;
    p.x += a.v * std::cos(mid) * h;
    p.y += a.v * std::sin(mid) * h;
    p.heading += a.omega * h;
  }
  p.heading = wrap_angle(p.heading);
  return p;
}

}  // namespace

TEST(StepExact, Straight) {
  const Pose2D p = step_exact({0, 0, 0}, {0.25, 0.0}, 0.2);
  EXPECT_NEAR(p.x, 0.05, 1e-15);
  EXPECT_NEAR(p.y, 0.0, 1e-15);
  EXPECT_EQ(p.heading, 0.0);
}

TEST(StepExact, RotationInPlace) {
  const Pose2D p = step_exact({0, 0, 0}, {0.0, 0.5}, 0.2);
  EXPECT_EQ(p.x, 0.0);
  EXPECT_EQ(p.y, 0.0);
  EXPECT_NEAR(p.heading, 0.1, 1e-15);
}

TEST(StepExact, MatchesDenseEuler) {
  // 1 kHz integration over one control period
  for (const Action a : {Action{0.25, 1.0}, Action{0.1, -1.5}, Action{0.2, 0.3}}) {
    const Pose2D exact = step_exact({0.4, -0.3, 0.7}, a, 0.2);
    const Pose2D e1k = euler({0.4, -0.3, 0.7}, a, 0.2, 200);
    EXPECT_NEAR(exact.x, e1k.x, 1e-6);
    EXPECT_NEAR(exact.y, e1k.y, 1e-6);
    EXPECT_NEAR(exact.heading, e1k.heading, 1e-9);
  }
}

TEST(StepExact, ArcLengthEqualsVdt) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> v(0.0, 0.25), w(-1.5, 1.5), a(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Action act{v(rng), w(rng)};
    const Pose2D p0{0, 0, a(rng)};
    const Pose2D p1 = step_exact(p0, act, 0.2);
    const double chord = distance(p0.position(), p1.position());
    const double turn = act.omega * 0.2;
    // chord of an arc of length s turning by t: 2 (s / t) sin(t / 2)
    const double arc = std::abs(turn) < 1e-12 ? chord : chord * (turn / 2) / std::sin(turn / 2);
    EXPECT_NEAR(arc, act.v * 0.2, 1e-9);
  }
}

TEST(StepExact, SubstepComposition) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(0.0, 0.25), w(-1.5, 1.5), a(-kPi, kPi);
  for (int i = 0; i < 500; ++i) {
    const Action act{v(rng), w(rng)};
    const Pose2D p0{0.3, -0.2, a(rng)};
    const Pose2D one = step_exact(p0, act, 0.2);
    Pose2D many = p0;
    for (int k = 0; k < 10; ++k) many = step_exact(many, act, 0.02);
    EXPECT_NEAR(one.x, many.x, 1e-9);
    EXPECT_NEAR(one.y, many.y, 1e-9);
    EXPECT_NEAR(std::abs(wrap_angle(one.heading - many.heading)), 0.0, 1e-9);
  }
}

TEST(ActionFromSegment, Examples) {
  auto s = action_from_segment(0.05, 0.0, 0.25);
  EXPECT_EQ(s.action, (Action{0.25, 0.0}));
  EXPECT_FALSE(s.clamped);
  s = action_from_segment(0.05, 0.1, 0.25);
  EXPECT_NEAR(s.action.v, 0.25, 1e-15);
  EXPECT_NEAR(s.action.omega, 0.5, 1e-12);
  try {
    (void)action_from_segment(0.0, 0.1, 0.25);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_segment);
  }
}

TEST(ActionFromSegment, ClampsOmegaWithFlag) {
  const auto s = action_from_segment(0.05, 1.0, 0.25);
  EXPECT_TRUE(s.clamped);
  EXPECT_EQ(s.action.omega, 1.5);
  EXPECT_EQ(action_from_segment(0.05, -1.0, 0.25).action.omega, -1.5);
}

TEST(ActionFromSegment, ReplayReproducesSegment) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(0.1, 0.25), t(-0.3, 0.3);
  const DiffDriveParams params;
  for (int i = 0; i < 1000; ++i) {
    const double speed = v(rng);
    const double dd = speed * params.dt;
    const double da = t(rng);
    const auto seg = action_from_segment(dd, da, speed, params);
    ASSERT_FALSE(seg.clamped);
    const Pose2D p1 = step_exact({0, 0, 0}, seg.action, params.dt);
    EXPECT_NEAR(seg.action.v * params.dt, dd, 1e-9);
    EXPECT_NEAR(p1.heading, da, 1e-9);
  }
}

TEST(WheelSpeeds, Examples) {
  const DiffDriveParams p;
  auto w = wheel_speeds({0.25, 0.0}, p);
  EXPECT_NEAR(w.left, 0.25 / 0.035, 1e-12);
  EXPECT_NEAR(w.right, 0.25 / 0.035, 1e-12);
  EXPECT_NEAR(w.left, 7.1429, 1e-4);
  w = wheel_speeds({0.0, 1.0}, p);
  EXPECT_NEAR(w.right, 0.23 / (2 * 0.035), 1e-12);
  EXPECT_NEAR(w.left, -w.right, 1e-15);
  EXPECT_NEAR(w.right, 3.2857, 1e-4);
}

TEST(WheelSpeeds, RoundTrip) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(0.0, 0.25), w(-1.5, 1.5);
  const DiffDriveParams p;
  for (int i = 0; i < 1000; ++i) {
    const Action a{v(rng), w(rng)};
    const Action b = body_velocity(wheel_speeds(a, p), p);
    EXPECT_NEAR(a.v, b.v, 1e-12);
    EXPECT_NEAR(a.omega, b.omega, 1e-12);
  }
}

TEST(DiffDriveParams, Validity) {
  DiffDriveParams p;
  EXPECT_TRUE(p.valid());
  EXPECT_NEAR(p.dt * p.control_frequency, 1.0, 1e-15);
  p.v_min_demo = 0.3;
  EXPECT_FALSE(p.valid());
  EXPECT_TRUE(DiffDriveParams{}.within_caps({0.25, -1.5}));
  EXPECT_FALSE(DiffDriveParams{}.within_caps({0.26, 0.0}));
}
