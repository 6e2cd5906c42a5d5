#include "platoonsim/guidance.hpp"

#include <cmath>

#include "platoonsim/error.hpp"

namespace platoonsim {

std::string_view to_string(RoutePrimitive p) noexcept {
  switch (p) {
    case RoutePrimitive::Straight: return "straight";
    case RoutePrimitive::LeftTurn: return "left_turn";
    case RoutePrimitive::RightTurn: return "right_turn";
    case RoutePrimitive::Left: return "left";
    case RoutePrimitive::Right: return "right";
  }
  return "straight";
}

std::optional<RoutePrimitive> parse_route_primitive(std::string_view text) noexcept {
  for (auto p : {RoutePrimitive::Straight, RoutePrimitive::LeftTurn, RoutePrimitive::RightTurn,
                 RoutePrimitive::Left, RoutePrimitive::Right}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::string select_exit(const RoadNetwork& network, SegmentId id, const std::string& entry,
                        RoutePrimitive primitive) {
  const RoadSegment& seg = network.segment(id);
  if (seg.type() != SegmentType::Intersection || !is_turn(primitive)) return seg.default_exit(entry);
  const double wanted = primitive == RoutePrimitive::LeftTurn ? kPi / 2.0 : -kPi / 2.0;
  for (const auto& name : seg.port_names()) {
    if (name == entry) continue;
    if (std::abs(seg.route_turn(entry, name) - wanted) < 1e-6) return name;
  }
  return seg.default_exit(entry);
}

RouteState advance_route(RouteState route, const RoadNetwork& network, SegmentId new_segment,
                         const std::string& entry_port) {
  if (route.last_consumed_segment && *route.last_consumed_segment == new_segment)
    throw SimError(ErrorCode::InvalidArgument,
                   "segment " + std::to_string(new_segment.value) + " was already entered");
  network.segment(new_segment).port(entry_port);

  RoutePrimitive next = RoutePrimitive::Straight;
  if (!route.pending.empty()) {
    next = route.pending.front();
    route.pending.pop_front();
  }
  route.active = next;
  route.current_segment = new_segment;
  route.entry_port = entry_port;
  route.exit_port = select_exit(network, new_segment, entry_port, next);
  if (next == RoutePrimitive::Left) route.current_lane += 1;
  if (next == RoutePrimitive::Right) route.current_lane -= 1;
  route.last_consumed_segment = new_segment;
  ++route.consumed;
  return route;
}

Trajectory build_reference(const RouteState& route, const RoadNetwork& network,
                           int horizon_segments, double spacing) {
  if (!route.current_segment)
    throw SimError(ErrorCode::InvalidArgument, "route has not entered any segment");
  if (horizon_segments < 1) throw SimError(ErrorCode::InvalidArgument, "horizon must be >= 1");
  const RoadSegment& current = network.segment(*route.current_segment);
  if (is_turn(route.active) && current.type() != SegmentType::Intersection)
    throw SimError(ErrorCode::InvalidPrimitive,
                   std::string(to_string(route.active)) + " outside an intersection");
  if (route.current_lane < 1 || route.current_lane > current.spec().lanes)
    throw SimError(ErrorCode::NoSuchLane,
                   "lane " + std::to_string(route.current_lane) + " does not exist on segment " +
                       std::to_string(current.id().value));

  Trajectory out = network.lane_center(current.id(), route.current_lane, spacing, route.entry_port,
                                       route.exit_port);
  PortRef exit{current.id(), route.exit_port};
  for (int k = 1; k < horizon_segments; ++k) {
    const auto next = network.peer(exit);
    if (!next) {
      out.dead_end = true;
      break;
    }
    const RoadSegment& seg = network.segment(next->segment);
    const auto idx = static_cast<std::size_t>(k - 1);
    const RoutePrimitive upcoming =
        idx < route.pending.size() ? route.pending[idx] : RoutePrimitive::Straight;
    const std::string exit_name = select_exit(network, seg.id(), next->name, upcoming);
    const int lane = std::min(route.current_lane, seg.spec().lanes);
    out.append(network.lane_center(seg.id(), lane, spacing, next->name, exit_name));
    exit = {seg.id(), exit_name};
  }
  return out;
}

Trajectory preprocess(const Trajectory& trajectory, const Pose2D& vehicle_pose) {
  if (trajectory.empty())
    throw SimError(ErrorCode::EmptyTrajectory, "cannot preprocess an empty trajectory");
  std::size_t first = trajectory.size();
  while (first > 0 && to_body_frame(vehicle_pose, trajectory.points[first - 1].position).x > 0.0)
    --first;
  if (first == trajectory.size())
    throw SimError(ErrorCode::EmptyAhead, "no reference point lies ahead of the vehicle");
  Trajectory out;
  out.dead_end = trajectory.dead_end;
  out.points.assign(trajectory.points.begin() + static_cast<std::ptrdiff_t>(first),
                    trajectory.points.end());
  const double base = out.points.front().arc_length;
  for (auto& p : out.points) p.arc_length -= base;
  return out;
}

}  // namespace platoonsim
