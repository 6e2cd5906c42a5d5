#pragma once

#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "platoonsim/road_network.hpp"
#include "platoonsim/trajectory.hpp"

namespace platoonsim {

enum class RoutePrimitive { Straight, LeftTurn, RightTurn, Left, Right };

std::string_view to_string(RoutePrimitive p) noexcept;
/// Accepts "straight", "left_turn", "right_turn", "left", "right".
std::optional<RoutePrimitive> parse_route_primitive(std::string_view text) noexcept;

inline bool is_turn(RoutePrimitive p) noexcept {
  return p == RoutePrimitive::LeftTurn || p == RoutePrimitive::RightTurn;
}
inline bool is_lane_change(RoutePrimitive p) noexcept {
  return p == RoutePrimitive::Left || p == RoutePrimitive::Right;
}

/// Where a vehicle is on its route and what is still to come. One primitive
/// is consumed per segment entered.
struct RouteState {
  std::deque<RoutePrimitive> pending;
  std::optional<SegmentId> current_segment;
  std::string entry_port;
  std::string exit_port;
  RoutePrimitive active = RoutePrimitive::Straight;
  int current_lane = 1;  ///< target lane, counted relative to the travel direction
  std::optional<SegmentId> last_consumed_segment;
  std::size_t consumed = 0;
};

inline constexpr int kDefaultHorizonSegments = 2;

/// Exit port for a vehicle entering `segment` at `entry` and executing `primitive`.
/// Turn primitives pick the port rotated by +/- pi/2; anything else goes straight through.
std::string select_exit(const RoadNetwork& network, SegmentId segment, const std::string& entry,
                        RoutePrimitive primitive);

/// Consumes the next primitive (Straight when the queue is empty) for the segment just entered.
RouteState advance_route(RouteState route, const RoadNetwork& network, SegmentId new_segment,
                         const std::string& entry_port);

/// Lane-center reference over the current segment and up to horizon_segments-1 successors.
/// Throws NoSuchLane when the target lane is off the road and InvalidPrimitive for a
/// turn primitive outside an intersection. An open end before the horizon sets dead_end.
Trajectory build_reference(const RouteState& route, const RoadNetwork& network,
                           int horizon_segments = kDefaultHorizonSegments, double spacing = 1.0);

/// Maximal suffix of `trajectory` lying strictly ahead of the vehicle, arc length re-based to 0.
/// Throws EmptyAhead when no such point is left.
Trajectory preprocess(const Trajectory& trajectory, const Pose2D& vehicle_pose);

}  // namespace platoonsim
