#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "platoonsim/control.hpp"
#include "platoonsim/dynamics.hpp"
#include "platoonsim/engine.hpp"
#include "platoonsim/guidance.hpp"
#include "platoonsim/perception.hpp"
#include "platoonsim/road_network.hpp"

namespace platoonsim {

struct MetaSpec {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  double time_step = 0.05;
  double duration = 10.0;
  bool save_video = false;
  double fps = 10.0;
  int width = 1280;
  int height = 720;

  friend bool operator==(const MetaSpec&, const MetaSpec&) = default;
};

struct SegmentEntry {
  SegmentId id;
  SegmentSpec spec;

  friend bool operator==(const SegmentEntry&, const SegmentEntry&) = default;
};

/// `moving` is rigidly attached to `fixed`.
struct ConnectionEntry {
  PortRef fixed;
  PortRef moving;

  friend bool operator==(const ConnectionEntry&, const ConnectionEntry&) = default;
};

struct AutoConnectionEntry {
  PortRef from;
  PortRef to;
  double r_min = 10.0;

  friend bool operator==(const AutoConnectionEntry&, const AutoConnectionEntry&) = default;
};

enum class ControllerKind { PurePursuitAcc, Zero };

struct ControllerSpec {
  ControllerKind kind = ControllerKind::PurePursuitAcc;
  PurePursuitParams pure_pursuit;
  AccParams acc;
  double comfort_decel = 2.0;

  friend bool operator==(const ControllerSpec&, const ControllerSpec&) = default;
};

struct PlacementSpec {
  SegmentId segment;
  int lane = 1;
  double offset = 0.0;
  double speed = 0.0;
  std::string entry;  ///< empty: "start", or "west" on an intersection

  friend bool operator==(const PlacementSpec&, const PlacementSpec&) = default;
};

struct VehicleSpec {
  int id = 0;
  BicycleParams dynamics;
  ControllerSpec controller;
  SensorConfig sensor;
  std::vector<RoutePrimitive> route;
  /// Vehicles without a placement start out in the parking lot's care: they stay parked.
  std::optional<PlacementSpec> placement;

  friend bool operator==(const VehicleSpec&, const VehicleSpec&) = default;
};

struct PlatoonEvent {
  double t = 0.0;
  int vehicle = 0;
  std::optional<PlatoonDirective> directive;  ///< nullopt clears the vehicle's directive

  friend bool operator==(const PlatoonEvent&, const PlatoonEvent&) = default;
};

struct PlatoonSpec {
  PlatoonParams params;
  std::vector<PlatoonEvent> events;

  friend bool operator==(const PlatoonSpec&, const PlatoonSpec&) = default;
};

struct ScenarioSpec {
  MetaSpec meta;
  EngineConfig engine;  ///< dt and seed mirror meta
  std::vector<SegmentEntry> segments;
  std::vector<ConnectionEntry> connections;
  std::vector<AutoConnectionEntry> auto_connections;
  std::optional<ParkingLotConfig> parking_lot;
  std::vector<VehicleSpec> vehicles;
  std::optional<PlatoonSpec> platoon;
  LogConfig logging;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// Reads and fully validates a scenario file. Throws ParseError for malformed
/// YAML (with line and column) and ValidationError naming the offending key.
ScenarioSpec parse_scenario(const std::filesystem::path& path);
ScenarioSpec parse_scenario_text(const std::string& text);

/// Canonical YAML form; parse_scenario_text(serialize_scenario(s)) == s.
std::string serialize_scenario(const ScenarioSpec& spec);

/// Checks cross-field invariants and that the network, lot and vehicles can be
/// built. Throws ValidationError.
void validate_scenario(const ScenarioSpec& spec);

RoadNetwork build_network(const ScenarioSpec& spec);
std::unique_ptr<TrafficEnvironment> build_environment(const ScenarioSpec& spec);

/// Frame interval in steps: 1 / (fps * dt), which must be an integer.
std::uint64_t frame_stride(const MetaSpec& meta);
std::uint64_t step_count(const MetaSpec& meta);

}  // namespace platoonsim
