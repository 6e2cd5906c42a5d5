#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "platoonsim/error.hpp"
#include "platoonsim/perception.hpp"

using namespace platoonsim;

TEST(Sense, VehicleAheadAtSameSpeed) {
  SensorConfig cfg;
  cfg.range = 50;
  const auto data = sense({VehicleId{1}, {0, 0, 0, 10}}, {{VehicleId{2}, {10, 0, 0, 10}, 1}}, cfg);
  ASSERT_EQ(data.neighbors.size(), 1u);
  const auto& n = data.neighbors[0];
  EXPECT_EQ(n.vehicle_id, VehicleId{2});
  EXPECT_DOUBLE_EQ(n.rel_position.x, 10.0);
  EXPECT_DOUBLE_EQ(n.rel_position.y, 0.0);
  EXPECT_DOUBLE_EQ(n.rel_velocity.x, 0.0);
  EXPECT_DOUBLE_EQ(n.rel_velocity.y, 0.0);
  EXPECT_DOUBLE_EQ(n.distance, 10.0);
  EXPECT_EQ(n.lane, 1);
}

TEST(Sense, BehindIsOutsideHalfPlaneCone) {
  SensorConfig cfg;
  cfg.range = 50;
  const auto data = sense({VehicleId{1}, {0, 0, 0, 10}}, {{VehicleId{2}, {-10, 0, 0, 10}, 1}}, cfg);
  EXPECT_TRUE(data.neighbors.empty());
}

TEST(Sense, ConfigValidation) {
  SensorConfig cfg;
  cfg.fov = 0;
  EXPECT_THROW(validate(cfg), SimError);
  cfg = {};
  cfg.range = -1;
  EXPECT_THROW(validate(cfg), SimError);
  cfg = {};
  cfg.noise_sigma_vel = -0.1;
  EXPECT_THROW(validate(cfg), SimError);
}

TEST(Sense, RandomScenesMatchBruteForce) {
  std::mt19937_64 rng(500);
  for (int scene = 0; scene < 500; ++scene) {
    SensorConfig cfg;
    cfg.fov = oracle::uniform(rng, 0.2, kTwoPi);
    cfg.range = oracle::uniform(rng, 5, 80);
    const EgoView ego{VehicleId{0}, {oracle::uniform(rng, -50, 50), oracle::uniform(rng, -50, 50),
                                     oracle::uniform(rng, -kPi, kPi), oracle::uniform(rng, 0, 20)}};
    std::vector<OtherVehicle> others;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 1; i <= n; ++i)
      others.push_back({VehicleId{i},
                        {oracle::uniform(rng, -100, 100), oracle::uniform(rng, -100, 100),
                         oracle::uniform(rng, -kPi, kPi), oracle::uniform(rng, 0, 20)},
                        std::nullopt});
    const auto data = sense(ego, others, cfg, 1.0);

    std::set<int> expected;
    for (const auto& o : others) {
      const double dx = o.state.x - ego.state.x, dy = o.state.y - ego.state.y;
      const double dist = std::sqrt(dx * dx + dy * dy);
      const double lon = oracle::longitudinal(o.state.x, o.state.y, ego.state.x, ego.state.y, ego.state.theta);
      const double cos_bearing = dist > 0 ? lon / dist : 1.0;
      if (dist <= cfg.range && cos_bearing >= std::cos(cfg.fov / 2.0) - 1e-12) expected.insert(o.id.value);
    }
    std::set<int> got;
    for (const auto& m : data.neighbors) got.insert(m.vehicle_id.value);
    EXPECT_EQ(got, expected) << "scene " << scene;

    for (std::size_t i = 0; i < data.neighbors.size(); ++i) {
      const auto& m = data.neighbors[i];
      EXPECT_LE(m.distance, cfg.range);
      EXPECT_NE(m.vehicle_id, ego.id);
      if (i > 0) {
        const auto& prev = data.neighbors[i - 1];
        EXPECT_TRUE(prev.distance < m.distance ||
                    (prev.distance == m.distance && prev.vehicle_id < m.vehicle_id));
      }
      // Body-frame consistency.
      const auto it = std::find_if(others.begin(), others.end(), [&](auto& o) { return o.id == m.vehicle_id; });
      const Vec2 back = to_global_frame(ego.state.pose(), m.rel_position);
      EXPECT_NEAR(back.x, it->state.x, 1e-9);
      EXPECT_NEAR(back.y, it->state.y, 1e-9);
    }
  }
}

TEST(Sense, TiesBrokenById) {
  SensorConfig cfg;
  const auto data = sense({VehicleId{0}, {0, 0, 0, 0}},
                          {{VehicleId{5}, {10, 0, 0, 0}, {}}, {VehicleId{3}, {0, 10, 0, 0}, {}}}, cfg);
  ASSERT_EQ(data.neighbors.size(), 2u);
  EXPECT_EQ(data.neighbors[0].vehicle_id, VehicleId{3});
}

TEST(Noise, ZeroSigmaIsIdentity) {
  SensorConfig cfg;
  const auto data = sense({VehicleId{1}, {0, 0, 0.3, 5}},
                          {{VehicleId{2}, {10, 4, 0, 7}, 2}, {VehicleId{3}, {3, -1, 1, 2}, {}}}, cfg);
  NoiseEngine rng(1);
  EXPECT_EQ(add_noise(data, rng, cfg), data);
}

TEST(Noise, SeededIsBitIdentical) {
  SensorConfig cfg;
  cfg.noise_sigma_pos = 0.1;
  cfg.noise_sigma_vel = 0.05;
  const auto data = sense({VehicleId{1}, {0, 0, 0, 5}}, {{VehicleId{2}, {10, 4, 0, 7}, 2}}, cfg);
  NoiseEngine a(42), b(42);
  const auto na = add_noise(data, a, cfg);
  const auto nb = add_noise(data, b, cfg);
  EXPECT_EQ(na, nb);
  EXPECT_NE(na, data);
  EXPECT_EQ(na.neighbors[0].lane, 2);
  EXPECT_DOUBLE_EQ(na.neighbors[0].distance, na.neighbors[0].rel_position.norm());
}

TEST(Noise, PositionPerturbationStatistics) {
  SensorConfig cfg;
  cfg.noise_sigma_pos = 0.1;
  const auto data = sense({VehicleId{1}, {0, 0, 0, 5}}, {{VehicleId{2}, {10, 0, 0, 5}, {}}}, cfg);
  NoiseEngine rng(2024);
  const int n = 100000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double e = add_noise(data, rng, cfg).neighbors[0].rel_position.x - 10.0;
    sum += e;
    sum_sq += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  EXPECT_LT(std::abs(mean), 3.0 * 0.1 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sd, 0.1, 0.005);
}
