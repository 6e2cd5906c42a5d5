#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "platoonsim/geometry.hpp"
#include "platoonsim/trajectory.hpp"

namespace platoonsim {

struct SegmentId {
  int value = 0;
  auto operator<=>(const SegmentId&) const = default;
};

enum class SegmentType { Straight = 1, Curved = 2, Intersection = 3 };

struct SegmentSpec {
  SegmentType type = SegmentType::Straight;
  double length = 0.0;  ///< straight length, or arm length of an intersection
  double radius = 0.0;  ///< centerline radius (curved only)
  double sweep = 0.0;   ///< signed turn angle, positive = left (curved only)
  double orientation = 0.0;
  int lanes = 1;
  double lane_width = 3.5;
  double speed_limit = 10.0;
  Vec2 origin;  ///< "start" point for straight/curved, core center for intersections

  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

/// Throws SimError(InvalidSpec) naming the violated constraint.
void validate(const SegmentSpec& spec);

struct PortRef {
  SegmentId segment;
  std::string name;
  auto operator<=>(const PortRef&) const = default;
};

struct ConnectionPoint {
  SegmentId owner;
  std::string name;
  Pose2D pose;  ///< heading is the outward normal of the segment boundary
  std::optional<PortRef> peer;
};

/// Leftward offset of lane `lane` (1-based, 1 = rightmost) from the road axis.
double lane_offset(int lane, int lanes, double lane_width) noexcept;

class RoadSegment {
 public:
  RoadSegment(SegmentId id, SegmentSpec spec);

  SegmentId id() const noexcept { return id_; }
  const SegmentSpec& spec() const noexcept { return spec_; }
  SegmentType type() const noexcept { return spec_.type; }
  Pose2D placement() const noexcept { return {spec_.origin, spec_.orientation}; }

  /// Port names in a fixed order: start/end, or north/south/east/west.
  const std::vector<std::string>& port_names() const noexcept;
  bool has_port(const std::string& name) const noexcept;
  const ConnectionPoint& port(const std::string& name) const;
  const std::map<std::string, ConnectionPoint>& ports() const noexcept { return ports_; }

  /// Port reached when driving straight through from `entry`.
  std::string default_exit(const std::string& entry) const;
  /// Heading change in (-pi, pi] of a route that enters at `entry` and leaves at `exit`.
  double route_turn(const std::string& entry, const std::string& exit) const;
  /// Global centerline of `lane` (numbered relative to the travel direction).
  Path route_path(const std::string& entry, const std::string& exit, int lane) const;
  /// Global road axis in the forward direction (start->end); empty for intersections.
  Path axis_path() const;
  /// Length of the route along the road axis.
  double route_length(const std::string& entry, const std::string& exit) const;

 private:
  friend class RoadNetwork;
  void place(const Pose2D& placement);
  void recompute_port_poses();

  SegmentId id_;
  SegmentSpec spec_;
  std::map<std::string, ConnectionPoint> ports_;
};

struct RoadQuery {
  SegmentId segment;
  int lane = 1;               ///< numbered relative to `forward_heading`
  double lateral_offset = 0;  ///< leftward offset from that lane's center
  double speed_limit = 0;
  double lane_width = 0;
  int lanes = 1;
  double forward_heading = 0;  ///< road direction in which `lane` is counted
};

struct GraphNode {
  std::vector<PortRef> ports;  ///< merged connection points
  Vec2 position;
};

struct GraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  SegmentId segment;
  std::string from_port;
  std::string to_port;
};

struct NetworkGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  std::optional<std::size_t> node_of(const PortRef& port) const;
  std::vector<std::size_t> out_edges(std::size_t node) const;
};

/// Mutable road-network aggregate. Segments are kept ordered by id.
class RoadNetwork {
 public:
  SegmentId create_road_segment(const SegmentSpec& spec);
  SegmentId create_road_segment(SegmentId id, const SegmentSpec& spec);

  bool contains(SegmentId id) const noexcept { return segments_.count(id) != 0; }
  const RoadSegment& segment(SegmentId id) const;
  const std::map<SegmentId, RoadSegment>& segments() const noexcept { return segments_; }
  bool empty() const noexcept { return segments_.empty(); }

  const ConnectionPoint& port(const PortRef& ref) const;
  std::optional<PortRef> peer(const PortRef& ref) const;

  bool is_compatible(SegmentId a, SegmentId b) const;

  /// Moves `moving` so that its `cp_moving` abuts `cp_fixed` head-on, then links both points.
  void connect_road_segments(SegmentId fixed, const std::string& cp_fixed, SegmentId moving,
                             const std::string& cp_moving);

  /// Fills the gap between two open ends with the segments of a Dubins CSC path.
  /// Returns the ids of the new segments in travel order from `a` to `b`.
  std::vector<SegmentId> create_connection(SegmentId a, const std::string& cp_a, SegmentId b,
                                           const std::string& cp_b, double r_min);

  /// Forward lane center of a straight or curved segment.
  Trajectory lane_center(SegmentId segment, int lane, double spacing) const;
  /// Lane center of the route `entry` -> `exit` through any segment.
  Trajectory lane_center(SegmentId segment, int lane, double spacing, const std::string& entry,
                         const std::string& exit) const;

  std::optional<RoadQuery> query_road(const Vec2& position, double lateral_margin = 0.0) const;

  NetworkGraph as_graph() const;
  std::vector<PortRef> open_ends() const;

  SegmentId next_free_id() const noexcept;

 private:
  RoadSegment& mutable_segment(SegmentId id);
  void link(const PortRef& a, const PortRef& b);

  std::map<SegmentId, RoadSegment> segments_;
};

}  // namespace platoonsim
