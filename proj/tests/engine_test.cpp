#include <gtest/gtest.h>

#include "platoonsim/engine.hpp"
#include "platoonsim/error.hpp"

using namespace platoonsim;

namespace {

SegmentSpec straight(double length, double orientation = 0.0) {
  SegmentSpec s;
  s.type = SegmentType::Straight;
  s.length = length;
  s.orientation = orientation;
  s.lanes = 2;
  s.lane_width = 4.0;
  s.speed_limit = 12.0;
  return s;
}

ControllerSet tracking(AccParams acc = {}) {
  ControllerSet c;
  c.lateral = std::make_unique<PurePursuitController>(PurePursuitParams{}, InputLimits{});
  c.longitudinal = std::make_unique<AccController>(acc, InputLimits{});
  return c;
}

ControllerSet zero() {
  ControllerSet c;
  c.combined = std::make_unique<ZeroController>();
  return c;
}

void add(TrafficEnvironment& env, int id, ControllerSet c, std::deque<RoutePrimitive> route = {}) {
  env.create_vehicle(VehicleId{id}, std::make_unique<BicycleModel>(BicycleParams{}), std::move(c), SensorConfig{},
                     std::move(route));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const SimError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected SimError";
  return ErrorCode::InvalidArgument;
}

RoadNetwork single(double length) {
  RoadNetwork net;
  net.create_road_segment(straight(length));
  return net;
}

// Rounded-rectangle ring: four straights joined by quarter curves.
RoadNetwork ring() {
  RoadNetwork net;
  SegmentSpec c;
  c.type = SegmentType::Curved;
  c.radius = 40;
  c.sweep = kPi / 2;
  c.lanes = 2;
  c.lane_width = 4;
  c.speed_limit = 12;
  std::vector<SegmentId> ids;
  for (int k = 0; k < 4; ++k) {
    ids.push_back(net.create_road_segment(straight(60)));
    ids.push_back(net.create_road_segment(c));
  }
  for (std::size_t k = 0; k < ids.size(); ++k)
    net.connect_road_segments(ids[k], "end", ids[(k + 1) % ids.size()], "start");
  return net;
}

}  // namespace

TEST(Registry, CreateAndErrors) {
  TrafficEnvironment env(single(100), {});
  add(env, 1, zero());
  EXPECT_EQ(env.vehicle(VehicleId{1}).status, VehicleStatus::Parked);
  EXPECT_EQ(code_of([&] { add(env, 1, zero()); }), ErrorCode::DuplicateId);
  ControllerSet both = tracking();
  both.combined = std::make_unique<ZeroController>();
  EXPECT_EQ(code_of([&] { add(env, 2, std::move(both)); }), ErrorCode::ControllerAmbiguity);
  EXPECT_EQ(code_of([&] { add(env, 3, ControllerSet{}); }), ErrorCode::ControllerAmbiguity);
  ControllerSet half;
  half.lateral = std::make_unique<PurePursuitController>(PurePursuitParams{}, InputLimits{});
  EXPECT_EQ(code_of([&] { add(env, 4, std::move(half)); }), ErrorCode::ControllerAmbiguity);
  EXPECT_EQ(code_of([&] { env.vehicle(VehicleId{9}); }), ErrorCode::UnknownVehicle);
}

TEST(Placement, OnLaneCenterWithTangentHeading) {
  TrafficEnvironment env(single(100), {});
  add(env, 1, zero());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 0.0, 5.0);
  const auto& v = env.vehicle(VehicleId{1});
  const auto lane = env.network().lane_center(SegmentId{1}, 1, 1.0);
  EXPECT_EQ(v.status, VehicleStatus::Active);
  EXPECT_NEAR(v.state.x, lane.points[0].position.x, 1e-12);
  EXPECT_NEAR(v.state.y, lane.points[0].position.y, 1e-12);
  EXPECT_NEAR(v.state.theta, lane.points[0].heading, 1e-12);
  EXPECT_EQ(v.state.v, 5.0);
}

TEST(Placement, OffRoadAndConflict) {
  TrafficEnvironment env(single(100), {});
  add(env, 1, zero());
  add(env, 2, zero());
  EXPECT_EQ(code_of([&] { env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 150.0, 0); }),
            ErrorCode::OffRoadSpawn);
  EXPECT_EQ(code_of([&] { env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 3, 10.0, 0); }),
            ErrorCode::OffRoadSpawn);
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 20.0, 0);
  EXPECT_EQ(code_of([&] { env.add_vehicle_to_segment(VehicleId{2}, SegmentId{1}, 1, 20.0, 0); }),
            ErrorCode::SpawnConflict);
  EXPECT_EQ(env.vehicle(VehicleId{2}).status, VehicleStatus::Parked);
}

TEST(Step, EmptyEnvironmentAdvancesClock) {
  TrafficEnvironment env(RoadNetwork{}, EngineConfig{0.1});
  for (int i = 1; i <= 10; ++i) {
    const auto r = env.step();
    EXPECT_EQ(r.step_index, static_cast<std::uint64_t>(i));
    EXPECT_DOUBLE_EQ(r.t, i * 0.1);
    EXPECT_TRUE(r.transitions.empty());
    EXPECT_TRUE(r.records.empty());
  }
}

TEST(Step, ZeroControllerAtRestIsFixedPoint) {
  TrafficEnvironment env(single(100), {});
  add(env, 1, zero());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 2, 30.0, 0.0);
  const VehicleState before = env.vehicle(VehicleId{1}).state;
  for (int i = 0; i < 100; ++i) env.step();
  EXPECT_EQ(env.vehicle(VehicleId{1}).state, before);
  EXPECT_EQ(env.vehicle(VehicleId{1}).status, VehicleStatus::Active);
}

TEST(Step, DrivingOffAnOpenEndWithoutLotCrashes) {
  TrafficEnvironment env(single(40), {});
  add(env, 1, tracking());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 0.0, 10.0);
  bool crashed = false;
  for (int i = 0; i < 200 && !crashed; ++i)
    for (const auto& tr : env.step().transitions) crashed = crashed || tr.to == VehicleStatus::Crashed;
  EXPECT_TRUE(crashed);
  // Crashed is absorbing and still sensable, but never integrated.
  const VehicleState frozen = env.vehicle(VehicleId{1}).state;
  for (int i = 0; i < 20; ++i) env.step();
  EXPECT_EQ(env.vehicle(VehicleId{1}).state, frozen);
  EXPECT_EQ(env.vehicle(VehicleId{1}).status, VehicleStatus::Crashed);
}

TEST(Step, SteeringOffTheRoadCrashes) {
  TrafficEnvironment env(single(200), {});
  ControllerSet c;
  struct HardLeft final : CombinedController {
    ControlInput compute(const ControllerContext&) override { return {0.0, 0.6}; }
  };
  c.combined = std::make_unique<HardLeft>();
  add(env, 1, std::move(c));
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 10.0, 8.0);
  for (int i = 0; i < 100; ++i) env.step();
  const auto& v = env.vehicle(VehicleId{1});
  EXPECT_EQ(v.status, VehicleStatus::Crashed);
  EXPECT_FALSE(env.network().query_road(v.state.position(), crash_margin(env.config())));
}

TEST(Step, NonFiniteInputCrashesWithoutHalting) {
  TrafficEnvironment env(single(200), {});
  ControllerSet c;
  struct Broken final : CombinedController {
    ControlInput compute(const ControllerContext&) override { return {std::nan(""), 0.0}; }
  };
  c.combined = std::make_unique<Broken>();
  add(env, 1, std::move(c));
  add(env, 2, tracking());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 10.0, 8.0);
  env.add_vehicle_to_segment(VehicleId{2}, SegmentId{1}, 2, 60.0, 8.0);
  const auto r = env.step();
  ASSERT_EQ(r.transitions.size(), 1u);
  EXPECT_EQ(r.transitions[0].vehicle, VehicleId{1});
  EXPECT_EQ(r.transitions[0].to, VehicleStatus::Crashed);
  EXPECT_EQ(env.vehicle(VehicleId{2}).status, VehicleStatus::Active);
}

TEST(Step, VehiclesTrackTheRingLaneCenter) {
  TrafficEnvironment env(ring(), {});
  add(env, 1, tracking(AccParams{5, 0.8, 0.3, 0.6, 12}));
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 0.0, 10.0);
  double worst = 0;
  for (int i = 0; i < 1200; ++i) {
    env.step();
    const auto q = env.network().query_road(env.vehicle(VehicleId{1}).state.position());
    ASSERT_TRUE(q);
    worst = std::max(worst, std::abs(q->lateral_offset));
  }
  EXPECT_EQ(env.vehicle(VehicleId{1}).status, VehicleStatus::Active);
  EXPECT_LT(worst, 0.5);
  EXPECT_GT(env.vehicle(VehicleId{1}).route.consumed, 8u);
}

TEST(Step, LaneChangeHeldUntilTargetLaneClears) {
  TrafficEnvironment env(single(400), {});
  AccParams slow{5, 0.8, 0.3, 0.6, 8};
  add(env, 1, tracking(slow), {RoutePrimitive::Left});
  add(env, 2, tracking(slow));
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 20.0, 8.0);
  env.add_vehicle_to_segment(VehicleId{2}, SegmentId{1}, 2, 27.0, 8.0);  // inside the window on the target lane
  const auto& v1 = env.vehicle(VehicleId{1});
  EXPECT_EQ(v1.route.current_lane, 2);
  env.step();
  EXPECT_EQ(v1.tracked_lane, 1);

  TrafficEnvironment free_env(single(400), {});
  add(free_env, 1, tracking(slow), {RoutePrimitive::Left});
  free_env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 20.0, 8.0);
  free_env.step();
  EXPECT_EQ(free_env.vehicle(VehicleId{1}).tracked_lane, 2);
  for (int i = 0; i < 200; ++i) free_env.step();
  const auto q = free_env.network().query_road(free_env.vehicle(VehicleId{1}).state.position());
  ASSERT_TRUE(q);
  EXPECT_EQ(q->lane, 2);
  EXPECT_EQ(free_env.vehicle(VehicleId{1}).status, VehicleStatus::Active);
}

TEST(Step, RouteFaultIsCountedNotFatal) {
  TrafficEnvironment env(single(100), {});
  add(env, 1, tracking(), {RoutePrimitive::LeftTurn});
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 0.0, 5.0);
  EXPECT_EQ(env.vehicle(VehicleId{1}).route_faults, 1u);
  EXPECT_EQ(env.vehicle(VehicleId{1}).route.active, RoutePrimitive::Straight);
  env.step();
  EXPECT_EQ(env.vehicle(VehicleId{1}).status, VehicleStatus::Active);
}

TEST(Snapshot, EvaluationOrderDoesNotMatter) {
  auto run = [](bool reverse) {
    EngineConfig cfg;
    cfg.reverse_iteration = reverse;
    cfg.seed = 7;
    TrafficEnvironment env(ring(), cfg);
    for (int id = 1; id <= 4; ++id) {
      add(env, id, tracking(AccParams{5, 0.8, 0.3, 0.6, 10.0 + id}));
    }
    for (int id = 1; id <= 4; ++id) env.add_vehicle_to_segment(VehicleId{id}, SegmentId{1}, 1 + id % 2, 50.0 - 12 * id, 10);
    std::vector<VehicleState> trace;
    for (int i = 0; i < 400; ++i) {
      env.step();
      for (auto* v : env.vehicles()) trace.push_back(v->state);
    }
    return trace;
  };
  EXPECT_EQ(run(false), run(true));
}

TEST(Logging, EveryStepWhenPeriodIsDt) {
  TrafficEnvironment env(single(100), {});
  add(env, 1, zero());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 0.0, 0.0);
  LogConfig lc;
  lc.channels = {LogChannel::Position};
  lc.sample_period = env.config().dt;
  env.set_log_config(lc);
  EXPECT_EQ(env.step().records.size(), 2u);  // t = 0 and t = dt
  for (int i = 0; i < 5; ++i) EXPECT_EQ(env.step().records.size(), 1u);
}

TEST(Logging, OutsideIntervalEmitsNothing) {
  TrafficEnvironment env(single(100), {});
  add(env, 1, zero());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 0.0, 0.0);
  LogConfig lc;
  lc.t_start = 100;
  lc.t_end = 200;
  env.set_log_config(lc);
  for (int i = 0; i < 20; ++i) EXPECT_TRUE(env.step().records.empty());
}

TEST(Logging, RecordCountMatchesClosedForm) {
  EngineConfig cfg;
  cfg.dt = 0.05;
  TrafficEnvironment env(single(100), cfg);
  add(env, 1, zero());
  add(env, 2, zero());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 0.0, 0.0);
  env.add_vehicle_to_segment(VehicleId{2}, SegmentId{1}, 2, 50.0, 0.0);
  LogConfig lc;
  lc.channels = {LogChannel::Position, LogChannel::Velocity, LogChannel::Status};
  lc.t_start = 1.0;
  lc.t_end = 7.5;
  lc.sample_period = 0.25;
  env.set_log_config(lc);
  std::map<std::pair<int, LogChannel>, int> counts;
  for (int i = 0; i < 200; ++i)
    for (const auto& r : env.step().records) ++counts[{r.vehicle.value, r.channel}];
  const int expected = static_cast<int>(std::floor((7.5 - 1.0) / 0.25)) + 1;
  EXPECT_EQ(counts.size(), 6u);
  for (const auto& [key, n] : counts) EXPECT_EQ(n, expected);
}

TEST(Logging, PeriodMustBeMultipleOfDt) {
  TrafficEnvironment env(single(100), {});
  LogConfig lc;
  lc.sample_period = 0.07;
  EXPECT_EQ(code_of([&] { env.set_log_config(lc); }), ErrorCode::InvalidArgument);
}

TEST(Platoon, CyclicScheduleRejected) {
  TrafficEnvironment env(single(100), {});
  env.schedule_directive(0.0, VehicleId{2}, PlatoonDirective{Follow{VehicleId{1}}});
  env.schedule_directive(5.0, VehicleId{3}, PlatoonDirective{Follow{VehicleId{2}}});
  EXPECT_EQ(code_of([&] { env.schedule_directive(7.0, VehicleId{1}, PlatoonDirective{Merge{VehicleId{3}}}); }),
            ErrorCode::CyclicLeadership);
  // Clearing the link first makes the same directive legal.
  env.schedule_directive(6.0, VehicleId{2}, std::nullopt);
  env.schedule_directive(7.0, VehicleId{1}, PlatoonDirective{Merge{VehicleId{3}}});
}

// --- parking lot ------------------------------------------------------------

namespace {

// A straight that feeds a vehicle into its own open end, with a lot at the start.
TrafficEnvironment lot_env(int platoon_size, double mean, double variance, double interval, std::uint64_t seed = 1) {
  EngineConfig cfg;
  cfg.seed = seed;
  TrafficEnvironment env(single(60), cfg);
  ParkingLotConfig lot;
  lot.platoon_size = platoon_size;
  lot.time_mean = mean;
  lot.time_variance = variance;
  lot.time_sequence_interval = interval;
  lot.exit_points = {{SegmentId{1}, "start"}};
  env.create_virtual_parking_lot(lot);
  return env;
}

}  // namespace

TEST(ParkingLot, ExitPointMustBeOpen) {
  RoadNetwork net;
  const auto a = net.create_road_segment(straight(10));
  const auto b = net.create_road_segment(straight(10));
  net.connect_road_segments(a, "end", b, "start");
  TrafficEnvironment env(std::move(net), {});
  ParkingLotConfig lot;
  lot.exit_points = {{a, "end"}};
  EXPECT_EQ(code_of([&] { env.create_virtual_parking_lot(lot); }), ErrorCode::InvalidArgument);
}

TEST(ParkingLot, PairReleasedAfterMeanThenSpacedByInterval) {
  auto env = lot_env(2, 5.0, 0.0, 4.0);
  add(env, 1, tracking());
  add(env, 2, tracking());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 40.0, 10.0);
  env.add_vehicle_to_segment(VehicleId{2}, SegmentId{1}, 2, 20.0, 10.0);
  std::vector<PlatoonRelease> scheduled;
  std::vector<ReleaseEvent> releases;
  std::map<int, double> parked_at;
  for (int i = 0; i < 400 && releases.size() < 2; ++i) {
    const auto r = env.step();
    for (const auto& tr : r.transitions)
      if (tr.to == VehicleStatus::Parked) parked_at[tr.vehicle.value] = r.t;
    scheduled.insert(scheduled.end(), r.scheduled.begin(), r.scheduled.end());
    releases.insert(releases.end(), r.releases.begin(), r.releases.end());
    EXPECT_EQ(env.count(VehicleStatus::Active) + env.count(VehicleStatus::Crashed) + env.count(VehicleStatus::Parked), 2u);
  }
  ASSERT_EQ(scheduled.size(), 1u);
  EXPECT_DOUBLE_EQ(scheduled[0].completed_at, std::max(parked_at[1], parked_at[2]));
  EXPECT_NEAR(scheduled[0].release_at, scheduled[0].completed_at + 5.0, 1e-9);
  ASSERT_EQ(releases.size(), 2u);
  EXPECT_EQ(releases[0].vehicle, VehicleId{1});  // first to arrive leaves first
  EXPECT_NEAR(releases[0].entered_at, scheduled[0].completed_at + 5.0, 1e-9);
  EXPECT_NEAR(releases[1].entered_at - releases[0].entered_at, 4.0, 1e-9);
  const auto& v = env.vehicle(VehicleId{1});
  EXPECT_EQ(v.status, VehicleStatus::Active);
  EXPECT_EQ(v.tracked_lane, 1);
}

TEST(ParkingLot, PlatoonOfOneReleasesIndividually) {
  auto env = lot_env(1, 2.0, 0.0, 0.0);
  add(env, 1, tracking());
  add(env, 2, tracking());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 40.0, 10.0);
  env.add_vehicle_to_segment(VehicleId{2}, SegmentId{1}, 2, 10.0, 10.0);
  std::size_t scheduled = 0;
  for (int i = 0; i < 200; ++i) {
    for (const auto& s : env.step().scheduled) {
      EXPECT_EQ(s.members.size(), 1u);
      ++scheduled;
    }
  }
  EXPECT_GE(scheduled, 2u);
}

TEST(ParkingLot, RandomDelaysAreSeeded) {
  auto schedule = [](std::uint64_t seed) {
    auto env = lot_env(1, 3.0, 4.0, 0.0, seed);
    add(env, 1, tracking());
    env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 40.0, 10.0);
    std::vector<double> out;
    for (int i = 0; i < 2000; ++i)
      for (const auto& s : env.step().scheduled) out.push_back(s.release_at - s.completed_at);
    return out;
  };
  const auto a = schedule(11);
  EXPECT_GE(a.size(), 3u);
  EXPECT_EQ(a, schedule(11));
  EXPECT_NE(a, schedule(12));
  for (double d : a) EXPECT_GE(d, 0.0);
}

TEST(ParkingLot, BlockedExitDefersRelease) {
  auto env = lot_env(1, 0.0, 0.0, 0.0);
  add(env, 1, tracking());
  add(env, 2, zero());
  env.add_vehicle_to_segment(VehicleId{1}, SegmentId{1}, 1, 50.0, 10.0);
  env.add_vehicle_to_segment(VehicleId{2}, SegmentId{1}, 2, 2.0, 0.0);  // parked on the lot's exit
  bool blocked = false;
  for (int i = 0; i < 100; ++i) blocked = blocked || !env.step().blocked_exits.empty();
  EXPECT_TRUE(blocked);
  EXPECT_EQ(env.vehicle(VehicleId{1}).status, VehicleStatus::Parked);
  EXPECT_EQ(env.lot_occupancy(), 1u);
}
