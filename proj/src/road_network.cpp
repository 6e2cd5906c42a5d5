#include "platoonsim/road_network.hpp"

#include <algorithm>
#include <limits>

#include "platoonsim/error.hpp"

namespace platoonsim {

namespace {

const std::vector<std::string> kLinearPorts{"start", "end"};
const std::vector<std::string> kIntersectionPorts{"north", "south", "east", "west"};

// Outward direction of an intersection port in the segment frame.
double intersection_port_direction(const std::string& name) {
  if (name == "east") return 0.0;
  if (name == "north") return kPi / 2.0;
  if (name == "west") return kPi;
  if (name == "south") return -kPi / 2.0;
  throw SimError(ErrorCode::UnknownConnectionPoint, "no intersection port '" + name + "'");
}

PathPiece transform_piece(const Pose2D& frame, const PathPiece& piece) {
  if (const auto* line = std::get_if<LineSegment>(&piece)) {
    return LineSegment{to_global_frame(frame, line->from), to_global_frame(frame, line->to)};
  }
  Arc arc = std::get<Arc>(piece);
  arc.center = to_global_frame(frame, arc.center);
  arc.start_angle = normalize_angle(arc.start_angle + frame.theta());
  return arc;
}

std::vector<PathPiece> transform_pieces(const Pose2D& frame, const std::vector<PathPiece>& pieces) {
  std::vector<PathPiece> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) out.push_back(transform_piece(frame, p));
  return out;
}

std::vector<PathPiece> reverse_pieces(const std::vector<PathPiece>& pieces) {
  std::vector<PathPiece> out;
  out.reserve(pieces.size());
  for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
    if (const auto* line = std::get_if<LineSegment>(&*it)) {
      out.emplace_back(LineSegment{line->to, line->from});
    } else {
      Arc arc = std::get<Arc>(*it);
      arc.start_angle = arc.start_angle + arc.sweep;
      arc.sweep = -arc.sweep;
      arc.turn = -arc.turn;
      out.emplace_back(arc);
    }
  }
  return out;
}

bool nearly_equal(const Vec2& a, const Vec2& b, double tol) { return distance(a, b) <= tol; }

}  // namespace

double lane_offset(int lane, int lanes, double lane_width) noexcept {
  return (static_cast<double>(lane) - (static_cast<double>(lanes) + 1.0) / 2.0) * lane_width;
}

void validate(const SegmentSpec& spec) {
  auto fail = [](const std::string& what) { throw SimError(ErrorCode::InvalidSpec, what); };
  if (spec.lanes < 1) fail("lanes must be >= 1");
  if (!(spec.lane_width > 0.0) || !std::isfinite(spec.lane_width)) fail("lane_width must be > 0");
  if (!(spec.speed_limit > 0.0) || !std::isfinite(spec.speed_limit)) fail("speed_limit must be > 0");
  if (!std::isfinite(spec.orientation) || !spec.origin.finite()) fail("placement must be finite");
  switch (spec.type) {
    case SegmentType::Straight:
      if (!(spec.length > 0.0) || !std::isfinite(spec.length)) fail("length must be > 0");
      break;
    case SegmentType::Intersection:
      if (!(spec.length >= 0.0) || !std::isfinite(spec.length)) fail("arm length must be >= 0");
      break;
    case SegmentType::Curved:
      if (!std::isfinite(spec.radius) || !std::isfinite(spec.sweep)) fail("curve must be finite");
      if (!(std::abs(spec.sweep) > 0.0) || std::abs(spec.sweep) > kTwoPi)
        fail("sweep must be non-zero with |sweep| <= 2*pi");
      if (!(spec.radius > spec.lanes * spec.lane_width / 2.0))
        fail("radius must exceed lanes*lane_width/2 so the inner lane radius stays positive");
      break;
    default:
      fail("unknown segment_type");
  }
}

// --- RoadSegment ---------------------------------------------------------------

RoadSegment::RoadSegment(SegmentId id, SegmentSpec spec) : id_(id), spec_(std::move(spec)) {
  validate(spec_);
  for (const auto& name : port_names()) ports_[name] = ConnectionPoint{id_, name, {}, std::nullopt};
  recompute_port_poses();
}

const std::vector<std::string>& RoadSegment::port_names() const noexcept {
  return spec_.type == SegmentType::Intersection ? kIntersectionPorts : kLinearPorts;
}

bool RoadSegment::has_port(const std::string& name) const noexcept {
  return ports_.count(name) != 0;
}

const ConnectionPoint& RoadSegment::port(const std::string& name) const {
  auto it = ports_.find(name);
  if (it == ports_.end())
    throw SimError(ErrorCode::UnknownConnectionPoint,
                   "segment " + std::to_string(id_.value) + " has no connection point '" + name + "'");
  return it->second;
}

void RoadSegment::place(const Pose2D& placement) {
  spec_.origin = placement.position();
  spec_.orientation = placement.theta();
  recompute_port_poses();
}

namespace {

// Local-frame centerline of a straight or curved segment, forward direction,
// at leftward offset `offset`.
std::vector<PathPiece> local_forward(const SegmentSpec& spec, double offset) {
  if (spec.type == SegmentType::Straight) {
    return {LineSegment{{0.0, offset}, {spec.length, offset}}};
  }
  const double turn = spec.sweep > 0.0 ? 1.0 : -1.0;
  Arc arc;
  arc.center = {0.0, turn * spec.radius};
  arc.radius = spec.radius - turn * offset;
  arc.start_angle = -turn * kPi / 2.0;
  arc.sweep = spec.sweep;
  arc.turn = turn;
  return {arc};
}

// Route through an intersection in its local frame.
std::vector<PathPiece> local_intersection(const SegmentSpec& spec, const std::string& entry,
                                          const std::string& exit, double offset) {
  const double half = spec.lanes * spec.lane_width / 2.0;
  const double arm = spec.length;
  const double travel = intersection_port_direction(entry) + kPi;
  const double turn = normalize_angle(intersection_port_direction(exit) - travel);

  // Built in a frame whose +x is the entry travel direction, then rotated.
  std::vector<PathPiece> pieces;
  if (arm > 0.0) pieces.emplace_back(LineSegment{{-half - arm, offset}, {-half, offset}});
  if (std::abs(turn) < 1e-9) {
    pieces.emplace_back(LineSegment{{-half, offset}, {half, offset}});
    if (arm > 0.0) pieces.emplace_back(LineSegment{{half, offset}, {half + arm, offset}});
  } else if (turn > 0.0) {
    const double r = half - offset;
    pieces.emplace_back(Arc{{-half, offset + r}, r, -kPi / 2.0, kPi / 2.0, 1.0});
    if (arm > 0.0) pieces.emplace_back(LineSegment{{-offset, half}, {-offset, half + arm}});
  } else {
    const double r = half + offset;
    pieces.emplace_back(Arc{{-half, offset - r}, r, kPi / 2.0, -kPi / 2.0, -1.0});
    if (arm > 0.0) pieces.emplace_back(LineSegment{{offset, -half}, {offset, -half - arm}});
  }
  return transform_pieces(Pose2D(0.0, 0.0, travel), pieces);
}

}  // namespace

void RoadSegment::recompute_port_poses() {
  const Pose2D frame = placement();
  if (spec_.type == SegmentType::Intersection) {
    const double reach = spec_.lanes * spec_.lane_width / 2.0 + spec_.length;
    for (const auto& name : kIntersectionPorts) {
      const double dir = intersection_port_direction(name);
      ports_[name].pose = compose(frame, Pose2D(reach * unit_vector(dir), dir));
    }
    return;
  }
  const Path axis(local_forward(spec_, 0.0));
  const Pose2D start = axis.start_pose();
  const Pose2D end = axis.end_pose();
  ports_["start"].pose = compose(frame, Pose2D(start.position(), start.theta() + kPi));
  ports_["end"].pose = compose(frame, end);
}

std::string RoadSegment::default_exit(const std::string& entry) const {
  port(entry);
  if (spec_.type != SegmentType::Intersection) return entry == "start" ? "end" : "start";
  if (entry == "north") return "south";
  if (entry == "south") return "north";
  if (entry == "east") return "west";
  return "east";
}

double RoadSegment::route_turn(const std::string& entry, const std::string& exit) const {
  return normalize_angle(port(exit).pose.theta() - (port(entry).pose.theta() + kPi));
}

Path RoadSegment::route_path(const std::string& entry, const std::string& exit, int lane) const {
  if (lane < 1 || lane > spec_.lanes)
    throw SimError(ErrorCode::UnknownLane, "lane " + std::to_string(lane) + " not in 1.." +
                                               std::to_string(spec_.lanes));
  port(entry);
  port(exit);
  if (entry == exit) throw SimError(ErrorCode::InvalidArgument, "route entry equals exit");
  const double offset = lane_offset(lane, spec_.lanes, spec_.lane_width);
  const Pose2D frame = placement();
  if (spec_.type == SegmentType::Intersection) {
    return Path(transform_pieces(frame, local_intersection(spec_, entry, exit, offset)));
  }
  if (entry == "start") return Path(transform_pieces(frame, local_forward(spec_, offset)));
  // Reverse travel: lane numbering mirrors, so use the opposite offset.
  return Path(transform_pieces(frame, reverse_pieces(local_forward(spec_, -offset))));
}

Path RoadSegment::axis_path() const {
  if (spec_.type == SegmentType::Intersection) return {};
  return Path(transform_pieces(placement(), local_forward(spec_, 0.0)));
}

double RoadSegment::route_length(const std::string& entry, const std::string& exit) const {
  if (spec_.type != SegmentType::Intersection) return Path(local_forward(spec_, 0.0)).length();
  return Path(local_intersection(spec_, entry, exit, 0.0)).length();
}

// --- NetworkGraph ----------------------------------------------------------------

std::optional<std::size_t> NetworkGraph::node_of(const PortRef& port) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (std::find(nodes[i].ports.begin(), nodes[i].ports.end(), port) != nodes[i].ports.end())
      return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> NetworkGraph::out_edges(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edges[i].from == node) out.push_back(i);
  return out;
}

// --- RoadNetwork ---------------------------------------------------------------

SegmentId RoadNetwork::next_free_id() const noexcept {
  return segments_.empty() ? SegmentId{1} : SegmentId{segments_.rbegin()->first.value + 1};
}

SegmentId RoadNetwork::create_road_segment(const SegmentSpec& spec) {
  return create_road_segment(next_free_id(), spec);
}

SegmentId RoadNetwork::create_road_segment(SegmentId id, const SegmentSpec& spec) {
  if (segments_.count(id))
    throw SimError(ErrorCode::DuplicateId, "segment " + std::to_string(id.value) + " exists");
  segments_.emplace(id, RoadSegment(id, spec));
  return id;
}

const RoadSegment& RoadNetwork::segment(SegmentId id) const {
  auto it = segments_.find(id);
  if (it == segments_.end())
    throw SimError(ErrorCode::UnknownSegment, "no segment " + std::to_string(id.value));
  return it->second;
}

RoadSegment& RoadNetwork::mutable_segment(SegmentId id) {
  return const_cast<RoadSegment&>(std::as_const(*this).segment(id));
}

const ConnectionPoint& RoadNetwork::port(const PortRef& ref) const {
  return segment(ref.segment).port(ref.name);
}

std::optional<PortRef> RoadNetwork::peer(const PortRef& ref) const { return port(ref).peer; }

bool RoadNetwork::is_compatible(SegmentId a, SegmentId b) const {
  const auto& sa = segment(a).spec();
  const auto& sb = segment(b).spec();
  return sa.lanes == sb.lanes && sa.lane_width == sb.lane_width;
}

void RoadNetwork::link(const PortRef& a, const PortRef& b) {
  mutable_segment(a.segment).ports_.at(a.name).peer = b;
  mutable_segment(b.segment).ports_.at(b.name).peer = a;
}

void RoadNetwork::connect_road_segments(SegmentId fixed, const std::string& cp_fixed,
                                        SegmentId moving, const std::string& cp_moving) {
  const ConnectionPoint& pf = port({fixed, cp_fixed});
  const ConnectionPoint& pm = port({moving, cp_moving});
  if (fixed == moving)
    throw SimError(ErrorCode::InvalidArgument, "cannot connect a segment to itself");
  if (!is_compatible(fixed, moving))
    throw SimError(ErrorCode::Incompatible, "segments " + std::to_string(fixed.value) + " and " +
                                                std::to_string(moving.value) +
                                                " differ in lanes or lane_width");
  if (pf.peer || pm.peer)
    throw SimError(ErrorCode::AlreadyConnected,
                   "connection point " + std::string(pf.peer ? cp_fixed : cp_moving) +
                       " already has a peer");

  const RoadSegment& seg = segment(moving);
  bool other_joints = false;
  for (const auto& [name, cp] : seg.ports())
    if (name != cp_moving && cp.peer) other_joints = true;

  const Pose2D target(pf.pose.position(), pf.pose.theta() + kPi);
  if (other_joints) {
    // Only an already-aligned pair may be joined without moving anything.
    const bool aligned =
        nearly_equal(pm.pose.position(), target.position(), 1e-9) &&
        std::abs(normalize_angle(pm.pose.theta() - target.theta())) <= 1e-9;
    if (!aligned)
      throw SimError(ErrorCode::WouldTearJoint,
                     "segment " + std::to_string(moving.value) +
                         " has other connected points and cannot be moved");
  } else {
    const Pose2D port_local = compose(inverse(seg.placement()), pm.pose);
    mutable_segment(moving).place(compose(target, inverse(port_local)));
  }
  link({fixed, cp_fixed}, {moving, cp_moving});
}

std::vector<SegmentId> RoadNetwork::create_connection(SegmentId a, const std::string& cp_a,
                                                      SegmentId b, const std::string& cp_b,
                                                      double r_min) {
  const ConnectionPoint& pa = port({a, cp_a});
  const ConnectionPoint& pb = port({b, cp_b});
  if (pa.peer || pb.peer)
    throw SimError(ErrorCode::AlreadyConnected,
                   "connection point " + std::string(pa.peer ? cp_a : cp_b) + " already has a peer");
  if (!is_compatible(a, b))
    throw SimError(ErrorCode::Incompatible, "segments " + std::to_string(a.value) + " and " +
                                                std::to_string(b.value) +
                                                " differ in lanes or lane_width");

  const Pose2D start = pa.pose;
  const Pose2D goal(pb.pose.position(), pb.pose.theta() + kPi);
  const CSCPlan plan = dubins_csc(start, goal, r_min);

  const SegmentSpec& base = segment(a).spec();
  std::vector<SegmentSpec> specs;
  auto make = [&](SegmentType type) {
    SegmentSpec s;
    s.type = type;
    s.lanes = base.lanes;
    s.lane_width = base.lane_width;
    s.speed_limit = base.speed_limit;
    return s;
  };
  auto add_arc = [&](const Arc& arc) {
    SegmentSpec s = make(SegmentType::Curved);
    s.radius = arc.radius;
    s.sweep = arc.sweep;
    const Pose2D p = arc.pose_at(0.0);
    s.origin = p.position();
    s.orientation = p.theta();
    validate(s);
    specs.push_back(s);
  };
  if (!plan.first_arc_degenerate) add_arc(plan.first_arc);
  if (!plan.straight_degenerate) {
    SegmentSpec s = make(SegmentType::Straight);
    const Vec2 d = plan.straight.to - plan.straight.from;
    s.length = d.norm();
    s.origin = plan.straight.from;
    s.orientation = std::atan2(d.y, d.x);
    validate(s);
    specs.push_back(s);
  }
  if (!plan.second_arc_degenerate) add_arc(plan.second_arc);

  std::vector<SegmentId> created;
  PortRef previous{a, cp_a};
  for (const auto& s : specs) {
    const SegmentId id = create_road_segment(s);
    created.push_back(id);
    link(previous, {id, "start"});
    previous = {id, "end"};
  }
  link(previous, {b, cp_b});
  return created;
}

namespace {

Trajectory sample_trajectory(const Path& path, double spacing, double speed_limit) {
  Trajectory out;
  const auto samples = path.sample(spacing);
  const auto n = samples.size();
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = n > 1 ? path.length() * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    out.points.push_back({samples[i].position(), samples[i].theta(), speed_limit, s});
  }
  return out;
}

}  // namespace

Trajectory RoadNetwork::lane_center(SegmentId id, int lane, double spacing) const {
  const RoadSegment& seg = segment(id);
  if (seg.type() == SegmentType::Intersection)
    throw SimError(ErrorCode::InvalidArgument,
                   "intersection lane centers need an entry and an exit port");
  return lane_center(id, lane, spacing, "start", "end");
}

Trajectory RoadNetwork::lane_center(SegmentId id, int lane, double spacing, const std::string& entry,
                                    const std::string& exit) const {
  const RoadSegment& seg = segment(id);
  return sample_trajectory(seg.route_path(entry, exit, lane), spacing, seg.spec().speed_limit);
}

namespace {

constexpr double kLongitudinalTolerance = 1e-6;

void consider(std::optional<RoadQuery>& best, const RoadSegment& seg, double lateral,
              double forward_heading) {
  const auto& spec = seg.spec();
  int lane = 1;
  double best_offset = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= spec.lanes; ++i) {
    const double off = lateral - lane_offset(i, spec.lanes, spec.lane_width);
    if (std::abs(off) < std::abs(best_offset)) {
      best_offset = off;
      lane = i;
    }
  }
  if (best && std::abs(best->lateral_offset) <= std::abs(best_offset)) return;
  best = RoadQuery{seg.id(), lane, best_offset, spec.speed_limit, spec.lane_width, spec.lanes,
                   normalize_angle(forward_heading)};
}

}  // namespace

std::optional<RoadQuery> RoadNetwork::query_road(const Vec2& position, double lateral_margin) const {
  std::optional<RoadQuery> best;
  for (const auto& [id, seg] : segments_) {
    const auto& spec = seg.spec();
    const double half = spec.lanes * spec.lane_width / 2.0;
    const double band = half + lateral_margin;
    if (seg.type() != SegmentType::Intersection) {
      const Path axis = seg.axis_path();
      const PathProjection proj = axis.project(position);
      if (std::abs(proj.overrun) > kLongitudinalTolerance) continue;
      if (std::abs(proj.lateral) > band) continue;
      consider(best, seg, proj.lateral, axis.pose_at(proj.station).theta());
      continue;
    }
    const Pose2D frame = seg.placement();
    const Vec2 p = to_body_frame(frame, position);
    const double reach = half + spec.length + kLongitudinalTolerance;
    const bool in_ew = std::abs(p.x) <= reach && std::abs(p.y) <= band;
    const bool in_ns = std::abs(p.y) <= reach && std::abs(p.x) <= band;
    const bool in_core = std::abs(p.x) <= band && std::abs(p.y) <= band;
    if (!in_ew && !in_ns) continue;
    // Lanes are counted along the east-west axis (heading east) or the
    // north-south axis (heading north), whichever the point is closer to.
    bool use_ew = in_ew;
    if (in_core) use_ew = std::abs(p.y) <= std::abs(p.x);
    if (use_ew) {
      consider(best, seg, p.y, frame.theta());
    } else {
      consider(best, seg, -p.x, frame.theta() + kPi / 2.0);
    }
  }
  return best;
}

NetworkGraph RoadNetwork::as_graph() const {
  NetworkGraph graph;
  std::map<PortRef, std::size_t> node_index;
  for (const auto& [id, seg] : segments_) {
    for (const auto& name : seg.port_names()) {
      const ConnectionPoint& cp = seg.port(name);
      PortRef ref{id, name};
      if (cp.peer) {
        auto it = node_index.find(*cp.peer);
        if (it != node_index.end()) {
          graph.nodes[it->second].ports.push_back(ref);
          node_index[ref] = it->second;
          continue;
        }
      }
      node_index[ref] = graph.nodes.size();
      graph.nodes.push_back({{ref}, cp.pose.position()});
    }
  }
  for (const auto& [id, seg] : segments_) {
    for (const auto& from : seg.port_names()) {
      for (const auto& to : seg.port_names()) {
        if (from == to) continue;
        graph.edges.push_back({node_index.at({id, from}), node_index.at({id, to}), id, from, to});
      }
    }
  }
  return graph;
}

std::vector<PortRef> RoadNetwork::open_ends() const {
  std::vector<PortRef> out;
  for (const auto& [id, seg] : segments_)
    for (const auto& name : seg.port_names())
      if (!seg.port(name).peer) out.push_back({id, name});
  return out;
}

}  // namespace platoonsim
