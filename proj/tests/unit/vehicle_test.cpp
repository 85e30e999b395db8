#include <gtest/gtest.h>

#include <random>

#include "hydrosim/core/rng.hpp"
#include "hydrosim/vehicle/dynamics.hpp"
#include "hydrosim/vehicle/sensors.hpp"
#include "hydrosim/vehicle/thrust.hpp"

using namespace hydrosim;
using namespace hydrosim::vehicle;
using world::Cell;
using world::OccupancyGrid;

TEST(Mix, Examples) {
  const auto t = mix({1.0, 0.0}, 0.8);
  EXPECT_EQ(t.left, 1.0);
  EXPECT_EQ(t.right, 1.0);
  const auto r = mix({0.0, 1.0}, 0.8);
  EXPECT_DOUBLE_EQ(r.left, -0.4);
  EXPECT_DOUBLE_EQ(r.right, 0.4);
  EXPECT_EQ(unmix(1, 1, 0.8), (VelocityCommand{1, 0}));
  const auto u = unmix(-0.4, 0.4, 0.8);
  EXPECT_DOUBLE_EQ(u.v_x, 0.0);
  EXPECT_DOUBLE_EQ(u.w_z, 1.0);
}

TEST(Mix, UnmixInvertsMix) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> v(-3, 3), b(0.1, 2.0);
  for (int i = 0; i < 10000; ++i) {
    const VelocityCommand c{v(rng), v(rng)};
    const double B = b(rng);
    const auto s = mix(c, B);
    const auto back = unmix(s.left, s.right, B);
    EXPECT_NEAR(back.v_x, c.v_x, 1e-12);
    EXPECT_NEAR(back.w_z, c.w_z, 1e-12);
  }
}

TEST(PwmMap, AffineAndMonotone) {
  const VehicleParams p;
  EXPECT_EQ(pwm_map(0.0, p), 1500.0);
  EXPECT_EQ(pwm_map(p.v_max, p), 2000.0);
  EXPECT_EQ(pwm_map(-p.v_max, p), 1000.0);
  EXPECT_DOUBLE_EQ(pwm_map(p.v_max / 2, p), 1750.0);
  EXPECT_EQ(pwm_map(10 * p.v_max, p), 2000.0);
  double prev = pwm_map(-p.v_max, p);
  for (int k = 1; k <= 200; ++k) {
    const double now = pwm_map(-p.v_max + 2 * p.v_max * k / 200, p);
    EXPECT_GE(now, prev);
    prev = now;
  }
}

TEST(ClampCommand, LimitsAndNonFinite) {
  const VehicleParams p;
  EXPECT_EQ(clamp_command({5, -5}, p), (VelocityCommand{p.v_max, -p.w_max}));
  EXPECT_EQ(clamp_command({NAN, 0.2}, p), (VelocityCommand{0, 0.2}));
}

TEST(StepDynamics, ZeroCommandStaysPut) {
  CounterRng rng(1);
  TrueState s;
  s.pose = {2, 3, 0.4};
  for (int i = 0; i < 100; ++i) s = step_dynamics(s, {0, 0}, {}, VehicleParams{}, 0.02, rng);
  EXPECT_EQ(s.pose, (Pose2{2, 3, 0.4}));
}

TEST(StepDynamics, StraightLineClosedForm) {
  CounterRng rng(1);
  VehicleParams p;
  p.thrust_lag = 0.0;
  TrueState s;
  for (int i = 0; i < 100; ++i) s = step_dynamics(s, {1, 1}, {}, p, 0.1, rng);
  EXPECT_NEAR(s.pose.x, 10.0, 1e-9);
  EXPECT_EQ(s.pose.y, 0.0);
}

TEST(StepDynamics, PureRotationClosedForm) {
  CounterRng rng(1);
  VehicleParams p;
  p.thrust_lag = 0.0;
  TrueState s;
  s.pose = {1, 1, 0};
  for (int i = 0; i < 10; ++i) s = step_dynamics(s, {-0.2, 0.2}, {}, p, 0.1, rng);
  EXPECT_EQ(s.pose.x, 1.0);
  EXPECT_EQ(s.pose.y, 1.0);
  EXPECT_NEAR(s.pose.theta, 0.4 / p.B * 1.0, 1e-12);
}

TEST(StepDynamics, LagApproachesTarget) {
  CounterRng rng(1);
  VehicleParams p;
  TrueState s = step_dynamics(TrueState{}, {1, 1}, {}, p, p.thrust_lag, rng);
  EXPECT_NEAR(s.v_l, 1.0 - std::exp(-1.0), 1e-12);
  for (int i = 0; i < 500; ++i) s = step_dynamics(s, {1, 1}, {}, p, 0.02, rng);
  EXPECT_NEAR(s.v, 1.0, 1e-9);
}

TEST(StepDynamics, SeededNoiseIsReproducible) {
  DisturbanceModel d;
  d.drift_amp = 0.05;
  d.white_sigma = 0.02;
  d.heading_white_sigma = 0.01;
  const auto run = [&](std::uint64_t seed) {
    CounterRng rng = RngFactory(seed).stream("dynamics");
    TrueState s;
    for (int i = 0; i < 1000; ++i) s = step_dynamics(s, {0.5, 0.6}, d, VehicleParams{}, 0.02, rng);
    return s.pose;
  };
  EXPECT_EQ(run(3), run(3));
  EXPECT_NE(run(3), run(4));
}

TEST(Disturbance, WhiteNoiseHasZeroMean) {
  DisturbanceModel d;
  d.white_sigma = 0.05;
  CounterRng rng(99);
  constexpr int N = 100000;
  double sx = 0, sy = 0;
  for (int i = 0; i < N; ++i) {
    const auto s = sample_disturbance(d, 0.0, rng);
    sx += s.velocity.x;
    sy += s.velocity.y;
  }
  EXPECT_LE(std::abs(sx / N), 3 * d.white_sigma / std::sqrt(N));
  EXPECT_LE(std::abs(sy / N), 3 * d.white_sigma / std::sqrt(N));
}

TEST(Disturbance, DriftFollowsSinusoid) {
  DisturbanceModel d;
  d.drift_amp = 0.1;
  d.drift_period = 40;
  d.drift_direction = std::numbers::pi / 2;
  EXPECT_NEAR(drift_velocity(d, 10).y, 0.1, 1e-12);
  EXPECT_NEAR(drift_velocity(d, 10).x, 0.0, 1e-12);
  EXPECT_NEAR(drift_velocity(d, 20).y, 0.0, 1e-12);
}

TEST(Lidar, EmptyGridAllMax) {
  const OccupancyGrid g(60, 60, 0.5);
  for (double r : raycast_lidar({15, 15, 0.3}, g, 360)) EXPECT_EQ(r, 12.0);
}

TEST(Lidar, WallAheadNotBehind) {
  OccupancyGrid g(40, 40, 0.5);
  for (int j = 0; j < 40; ++j) g.set(26, j, Cell::Occupied);  // x in [13, 13.5)
  g.set(10, 20, Cell::Occupied);                              // behind the vehicle
  const auto ranges = raycast_lidar({10.0, 10.2, 0.0}, g, 360);
  EXPECT_NEAR(ranges[0], 3.0, 0.5);
  EXPECT_DOUBLE_EQ(ranges[0], 3.0);
  EXPECT_DOUBLE_EQ(ranges[180], 4.5);  // rear beam meets the face at x = 5.5

  OccupancyGrid h(40, 40, 0.5);
  for (int j = 0; j < 40; ++j) h.set(26, j, Cell::Occupied);
  EXPECT_EQ(raycast_lidar({10.0, 10.2, 0.0}, h, 360)[0], ranges[0]);
  h.set(18, 20, Cell::Occupied);  // x in [9, 9.5): directly behind
  EXPECT_EQ(raycast_lidar({10.0, 10.2, 0.0}, h, 360)[0], ranges[0]);
}

TEST(Lidar, ObliqueBeamMatchesGeometry) {
  OccupancyGrid g(40, 40, 0.5);
  for (int j = 0; j < 40; ++j) g.set(26, j, Cell::Occupied);
  const auto ranges = raycast_lidar({10.0, 10.0, 0.0}, g, 8);
  // beam k = 1 at 45 degrees meets the wall face x = 13 after 3 / cos(45)
  EXPECT_NEAR(ranges[1], 3.0 * std::sqrt(2.0), 1e-9);
}

TEST(Lidar, ClampsAndErrors) {
  OccupancyGrid g(20, 20, 0.5);
  g.set(10, 10, Cell::Occupied);
  const auto ranges = raycast_lidar({4.95, 5.25, 0.0}, g, 4);
  EXPECT_EQ(ranges[0], 0.12);
  try {
    raycast_lidar({-1, 5, 0}, g, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PoseOutOfBounds);
  }
}

TEST(Roi, Examples) {
  OccupancyGrid g(60, 60, 0.5);
  const Pose2 pose{5.0, 15.2, 0.0};
  const RoiResult empty = roi_obstacle(pose, g);
  EXPECT_FALSE(empty.flag);
  EXPECT_EQ(empty.min_range, 10.0);

  OccupancyGrid near = g;
  near.set(14, 30, Cell::Occupied);  // x in [7, 7.5), 2 m ahead
  const RoiResult hit = roi_obstacle(pose, near);
  EXPECT_TRUE(hit.flag);
  EXPECT_NEAR(hit.min_range, 2.0, 1e-9);
  ASSERT_TRUE(hit.nearest.has_value());
  EXPECT_NEAR(hit.nearest->x, 7.0, 1e-9);

  OccupancyGrid far = g;
  far.set(32, 30, Cell::Occupied);  // 11 m ahead
  EXPECT_FALSE(roi_obstacle(pose, far).flag);

  OccupancyGrid aside = g;
  aside.set(14, 34, Cell::Occupied);  // 2 m ahead but 1.8 m to the left
  EXPECT_FALSE(roi_obstacle(pose, aside).flag);

  OccupancyGrid touching = g;
  touching.set(10, 30, Cell::Occupied);
  EXPECT_EQ(roi_obstacle({4.9, 15.2, 0.0}, touching).min_range, 0.5);

  RoiParams bad;
  bad.threshold = 0.2;
  EXPECT_THROW(roi_obstacle(pose, g, bad), Error);
}

TEST(Sensors, GnssNoiseStatistics) {
  SensorNoise n;
  n.gnss_sigma = 0.3;
  CounterRng rng(5);
  TrueState s;
  double sum = 0, sq = 0;
  constexpr int N = 20000;
  for (int i = 0; i < N; ++i) {
    const Vec2 z = gnss_measurement(s, n, rng);
    sum += z.x;
    sq += z.x * z.x;
  }
  EXPECT_LE(std::abs(sum / N), 3 * 0.3 / std::sqrt(N));
  EXPECT_NEAR(std::sqrt(sq / N), 0.3, 0.01);
}
