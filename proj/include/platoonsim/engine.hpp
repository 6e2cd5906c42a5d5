#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "platoonsim/control.hpp"
#include "platoonsim/dynamics.hpp"
#include "platoonsim/guidance.hpp"
#include "platoonsim/perception.hpp"
#include "platoonsim/road_network.hpp"

namespace platoonsim {

enum class VehicleStatus { Active, Crashed, Parked };
std::string_view to_string(VehicleStatus s) noexcept;
int status_code(VehicleStatus s) noexcept;  ///< 0 active, 1 crashed, 2 parked

/// Exactly one form must be filled: `combined`, or both `lateral` and `longitudinal`.
struct ControllerSet {
  std::unique_ptr<CombinedController> combined;
  std::unique_ptr<LateralController> lateral;
  std::unique_ptr<LongitudinalController> longitudinal;
};

struct Vehicle {
  VehicleId id;
  std::unique_ptr<DynamicsModel> dynamics;
  ControllerSet controllers;
  SensorConfig sensor;
  RouteState route;
  VehicleState state;
  VehicleStatus status = VehicleStatus::Parked;
  int tracked_lane = 1;  ///< lane the reference follows; lags route.current_lane while a lane change is held
  Trajectory reference;  ///< preprocessed reference of the last step
  ControlInput last_input;
  PerceptionData last_perception;
  NoiseEngine noise;
  std::size_t route_faults = 0;
};

struct ParkingLotConfig {
  int platoon_size = 1;
  double time_mean = 0.0;
  double time_variance = 0.0;
  double time_sequence_interval = 0.0;
  std::vector<PortRef> exit_points;

  friend bool operator==(const ParkingLotConfig&, const ParkingLotConfig&) = default;
};

enum class LogChannel { Position, Velocity, ControlInput, Status };
std::string_view to_string(LogChannel c) noexcept;
std::optional<LogChannel> parse_log_channel(std::string_view text) noexcept;

struct LogConfig {
  std::set<LogChannel> channels{LogChannel::Position, LogChannel::Velocity, LogChannel::ControlInput,
                                LogChannel::Status};
  double t_start = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
  double sample_period = 0.0;  ///< 0 means every step

  friend bool operator==(const LogConfig&, const LogConfig&) = default;
};

struct LogRecord {
  double t = 0.0;
  VehicleId vehicle;
  LogChannel channel = LogChannel::Position;
  std::vector<double> values;
};

struct StatusTransition {
  VehicleId vehicle;
  VehicleStatus from = VehicleStatus::Active;
  VehicleStatus to = VehicleStatus::Active;
};

struct PlatoonRelease {
  double completed_at = 0.0;  ///< time the platoon filled up
  double release_at = 0.0;    ///< departure time of its first member
  PortRef exit;
  std::vector<VehicleId> members;
};

struct ReleaseEvent {
  VehicleId vehicle;
  double scheduled_at = 0.0;
  double entered_at = 0.0;
  PortRef exit;
};

struct StepReport {
  double t = 0.0;
  std::uint64_t step_index = 0;
  std::vector<StatusTransition> transitions;
  std::vector<LogRecord> records;
  std::vector<PlatoonRelease> scheduled;
  std::vector<ReleaseEvent> releases;
  std::vector<VehicleId> blocked_exits;  ///< releases deferred by one step
  std::size_t route_faults = 0;
};

struct EngineConfig {
  double dt = 0.05;
  std::uint64_t seed = 0;
  double vehicle_width = 1.8;
  double vehicle_length = 4.5;
  double min_spawn_gap = 6.0;
  double trajectory_spacing = 1.0;
  int horizon_segments = kDefaultHorizonSegments;
  LaneChangeWindow lane_change;
  /// Evaluates vehicles in descending id order; results must not change.
  bool reverse_iteration = false;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

/// Lateral band beyond the outermost lane edge that still counts as on the road.
inline double crash_margin(const EngineConfig& cfg) noexcept { return 0.5 * cfg.vehicle_width; }

/// Records for one sampling instant, or none if `step_index`/`t` is not sampled.
std::vector<LogRecord> log(const LogConfig& config, std::uint64_t step_index, double t, double dt,
                           const std::vector<const Vehicle*>& vehicles);

/// Status of an active vehicle from its position. `exited` is true when the
/// vehicle has driven out through an open end.
VehicleStatus classify_status(const Vehicle& vehicle, const RoadNetwork& network, double margin,
                              bool exited, bool has_parking_lot);

/// Vehicle registry plus the fixed-step simulation loop.
class TrafficEnvironment {
 public:
  TrafficEnvironment(RoadNetwork network, EngineConfig config);

  const RoadNetwork& network() const noexcept { return network_; }
  const EngineConfig& config() const noexcept { return config_; }
  double time() const noexcept { return static_cast<double>(step_index_) * config_.dt; }
  std::uint64_t step_index() const noexcept { return step_index_; }

  /// Registers a vehicle in status Parked. Throws DuplicateId, ControllerAmbiguity.
  void create_vehicle(VehicleId id, std::unique_ptr<DynamicsModel> dynamics, ControllerSet controllers,
                      SensorConfig sensor, std::deque<RoutePrimitive> route);

  /// Places a registered vehicle on a lane center `offset` meters into the
  /// segment, traveling from `entry`. Throws OffRoadSpawn, SpawnConflict.
  void add_vehicle_to_segment(VehicleId id, SegmentId segment, int lane, double offset, double speed,
                              const std::string& entry = "");

  /// Vehicles leaving through an open end are parked here and released in platoons.
  void create_virtual_parking_lot(ParkingLotConfig config);
  bool has_parking_lot() const noexcept { return lot_.has_value(); }
  /// Hands a registered, not yet placed vehicle to the lot as if it had just arrived.
  void admit_to_parking_lot(VehicleId id);

  void set_log_config(LogConfig config);
  const LogConfig& log_config() const noexcept { return log_config_; }

  void set_platoon_params(PlatoonParams params);
  /// From time `t` on, `vehicle` follows `directive` (nullopt clears it).
  /// Throws CyclicLeadership if the schedule ever forms a leader cycle.
  void schedule_directive(double t, VehicleId vehicle, std::optional<PlatoonDirective> directive);
  const std::map<VehicleId, PlatoonDirective>& directives() const noexcept { return directives_; }

  StepReport step();

  const Vehicle& vehicle(VehicleId id) const;
  std::vector<const Vehicle*> vehicles() const;
  std::size_t count(VehicleStatus status) const noexcept;
  /// Vehicles currently waiting in the lot, either forming or scheduled.
  std::size_t lot_occupancy() const noexcept;
  const std::vector<PlatoonRelease>& release_history() const noexcept { return release_history_; }

 private:
  struct PendingEntry {
    double time = 0.0;
    double scheduled_at = 0.0;
    VehicleId vehicle;
    PortRef exit;
  };
  struct LotRuntime {
    ParkingLotConfig config;
    std::vector<VehicleId> forming;
    std::vector<PendingEntry> pending;
    std::mt19937_64 rng;
  };
  struct DirectiveEvent {
    double t = 0.0;
    std::size_t order = 0;
    VehicleId vehicle;
    std::optional<PlatoonDirective> directive;
  };
  struct Snapshot {
    std::map<VehicleId, VehicleState> states;
    std::map<VehicleId, std::optional<int>> lanes;
  };

  Vehicle& mutable_vehicle(VehicleId id);
  std::vector<VehicleId> iteration_order() const;
  Snapshot take_snapshot() const;
  std::optional<int> travel_lane(const VehicleState& state) const;
  bool spawn_blocked(const Vec2& position, VehicleId except) const;
  void place(Vehicle& v, SegmentId segment, const std::string& entry, int lane, double offset, double speed);
  void enter_segment(Vehicle& v, SegmentId segment, const std::string& entry, StepReport& report);
  /// Returns true if the vehicle drove out through an open end.
  bool update_route(Vehicle& v, StepReport& report);
  void rebuild_reference(Vehicle& v);
  void apply_directives(double t);
  void parking_lot_tick(StepReport& report);
  void emit_logs(StepReport& report) const;
  void set_status(Vehicle& v, VehicleStatus to, StepReport& report);

  RoadNetwork network_;
  EngineConfig config_;
  std::map<VehicleId, Vehicle> vehicles_;
  std::uint64_t step_index_ = 0;
  bool started_ = false;
  LogConfig log_config_;
  std::optional<LotRuntime> lot_;
  std::vector<PlatoonRelease> release_history_;
  PlatoonCoordinator coordinator_;
  std::vector<DirectiveEvent> directive_events_;
  std::size_t next_directive_event_ = 0;
  std::map<VehicleId, PlatoonDirective> directives_;
};

}  // namespace platoonsim
