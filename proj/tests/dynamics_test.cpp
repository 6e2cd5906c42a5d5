#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "platoonsim/dynamics.hpp"
#include "platoonsim/error.hpp"

using namespace platoonsim;

namespace {

// Position error against the analytic circle after a quarter of the 8 s lap.
// A whole lap is useless for an order study: with constant input the RK4
// stages reduce to Simpson quadrature of a periodic integrand, which closes
// the circle to round-off for any step size.
double circle_error(double dt, double delta, double horizon) {
  const BicycleParams p;
  const BicycleModel model(p);
  const double radius = p.wheelbase / std::tan(delta);
  const double v = kTwoPi * radius / 8.0;
  VehicleState s{0, 0, 0, v};
  const int steps = static_cast<int>(std::lround(horizon / dt));
  for (int i = 0; i < steps; ++i) s = integrate_step(model, s, {0.0, delta}, i * dt, dt);
  const auto exact = oracle::bicycle_circle(v, p.wheelbase, delta, horizon);
  return std::hypot(s.x - exact.x, s.y - exact.y);
}

}  // namespace

TEST(Bicycle, StraightCoasting) {
  const auto d = bicycle_derivative({0, 0, 0, 10}, {0, 0}, 0, BicycleParams{});
  EXPECT_EQ(d, (StateDerivative{10, 0, 0, 0}));
}

TEST(Bicycle, StandstillHasZeroDerivative) {
  const auto d = bicycle_derivative({3, 4, 1, 0}, {0, 0.5}, 0, BicycleParams{});
  EXPECT_EQ(d, (StateDerivative{0, 0, 0, 0}));
}

TEST(Bicycle, YawRateMatchesExtendedPrecision) {
  const auto d = bicycle_derivative({0, 0, 0, 10}, {0, 0.1}, 0, BicycleParams{});
  const long double expected = 10.0L * std::tan(0.1L) / 2.5L;
  EXPECT_NEAR(d.theta, static_cast<double>(expected), 1e-15);
}

TEST(Bicycle, InputSaturationIsInternal) {
  const BicycleParams p;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const VehicleState s{0, 0, oracle::uniform(rng, -3, 3), oracle::uniform(rng, 0, 30)};
    const ControlInput u{oracle::uniform(rng, -20, 20), oracle::uniform(rng, -1.5, 1.5)};
    const ControlInput clamped{std::clamp(u.a, p.a_min, p.a_max), std::clamp(u.delta, -p.delta_max, p.delta_max)};
    EXPECT_EQ(bicycle_derivative(s, u, 0, p), bicycle_derivative(s, clamped, 0, p));
    EXPECT_EQ(saturate(u, p), clamped);
  }
}

TEST(Bicycle, ParamValidation) {
  BicycleParams p;
  p.a_min = 1.0;
  EXPECT_THROW(validate(p), SimError);
  p = {};
  p.delta_max = 2.0;
  EXPECT_THROW(validate(p), SimError);
  p = {};
  p.wheelbase = 0.0;
  EXPECT_THROW(BicycleModel{p}, SimError);
}

TEST(Integrate, ConstantSpeedLineIsExact) {
  const BicycleModel model{BicycleParams{}};
  const auto s = integrate_step(model, {0, 0, 0, 10}, {0, 0}, 0, 1.0);
  EXPECT_DOUBLE_EQ(s.x, 10.0);
  EXPECT_DOUBLE_EQ(s.y, 0.0);
  EXPECT_DOUBLE_EQ(s.v, 10.0);
}

TEST(Integrate, RestIsFixedPoint) {
  const BicycleModel model{BicycleParams{}};
  const VehicleState s{1.5, -2.0, 0.3, 0.0};
  EXPECT_EQ(integrate_step(model, s, {0, 0}, 0, 0.05), s);
  // Braking at standstill does not reverse.
  EXPECT_EQ(integrate_step(model, s, {-6, 0.2}, 0, 0.05), s);
}

TEST(Integrate, HeadingStaysNormalized) {
  const BicycleModel model{BicycleParams{}};
  VehicleState s{0, 0, 0, 12};
  for (int i = 0; i < 5000; ++i) {
    s = integrate_step(model, s, {0, 0.6}, i * 0.05, 0.05);
    ASSERT_GT(s.theta, -kPi);
    ASSERT_LE(s.theta, kPi);
  }
}

TEST(Integrate, SpeedIsClampedToRange) {
  const BicycleModel model{BicycleParams{}};
  VehicleState s{0, 0, 0, 29.9};
  s = integrate_step(model, s, {3, 0}, 0, 1.0);
  EXPECT_EQ(s.v, 30.0);
  s = {0, 0, 0, 0.5};
  s = integrate_step(model, s, {-6, 0}, 0, 1.0);
  EXPECT_EQ(s.v, 0.0);
}

TEST(Integrate, NonFiniteStateRaises) {
  const BicycleModel model{BicycleParams{}};
  try {
    integrate_step(model, {std::numeric_limits<double>::quiet_NaN(), 0, 0, 1}, {0, 0}, 0, 0.1);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteState);
  }
  EXPECT_THROW(integrate_step(model, {0, 0, 0, 1}, {0, 0}, 0, 0.0), SimError);
}

TEST(Integrate, MatchesAnalyticCircle) {
  const BicycleParams p;
  const BicycleModel model(p);
  const double dt = 0.02;
  const double v = 8.0;
  const double delta = 0.25;
  VehicleState s{0, 0, 0, v};
  for (int i = 1; i <= 300; ++i) {
    s = integrate_step(model, s, {0, delta}, (i - 1) * dt, dt);
    const auto c = oracle::bicycle_circle(v, p.wheelbase, delta, i * dt);
    ASSERT_NEAR(s.x, c.x, 1e-7);
    ASSERT_NEAR(s.y, c.y, 1e-7);
  }
}

TEST(Integrate, FullLapClosesTheCircle) {
  for (double dt : {0.04, 0.02, 0.01}) EXPECT_LT(circle_error(dt, 0.3, 8.0), 1e-9);
}

TEST(Integrate, FourthOrderConvergenceOnCircle) {
  const double delta = 0.3;
  const double e1 = circle_error(0.04, delta, 2.0);
  const double e2 = circle_error(0.02, delta, 2.0);
  const double e3 = circle_error(0.01, delta, 2.0);
  EXPECT_LT(e1, 1e-6);
  const double r1 = e1 / e2;
  const double r2 = e2 / e3;
  EXPECT_GE(r1, 12.0);
  EXPECT_LE(r1, 20.0);
  EXPECT_GE(r2, 12.0);
  EXPECT_LE(r2, 20.0);
}
