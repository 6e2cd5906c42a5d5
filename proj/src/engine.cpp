#include "platoonsim/engine.hpp"

#include <algorithm>
#include <cmath>

#include "platoonsim/error.hpp"

namespace platoonsim {

namespace {

constexpr double kTimeTol = 1e-9;

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint32_t stream_a, std::uint32_t stream_b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    stream_a, stream_b};
  return std::mt19937_64(seq);
}

bool is_route_fault(ErrorCode code) noexcept {
  return code == ErrorCode::EmptyAhead || code == ErrorCode::EmptyTrajectory || code == ErrorCode::NoSuchLane ||
         code == ErrorCode::InvalidPrimitive;
}

// Consumes one primitive for `segment`. Primitives that cannot be executed
// there (a turn on a plain road, a lane change off the edge) are dropped and
// counted as faults.
std::size_t enter_route_segment(RouteState& route, int& tracked_lane, const RoadNetwork& network,
                                SegmentId segment, const std::string& entry) {
  // A lap around a one-segment loop re-enters the segment just consumed.
  if (route.last_consumed_segment == segment) route.last_consumed_segment.reset();
  route = advance_route(std::move(route), network, segment, entry);
  const RoadSegment& seg = network.segment(segment);
  std::size_t faults = 0;
  if (is_turn(route.active) && seg.type() != SegmentType::Intersection) {
    ++faults;
    route.active = RoutePrimitive::Straight;
    route.exit_port = seg.default_exit(entry);
  }
  if (route.current_lane < 1 || route.current_lane > seg.spec().lanes) {
    ++faults;
    route.current_lane = std::clamp(route.current_lane, 1, seg.spec().lanes);
  }
  tracked_lane = std::clamp(tracked_lane, 1, seg.spec().lanes);
  return faults;
}

}  // namespace

std::string_view to_string(VehicleStatus s) noexcept {
  switch (s) {
    case VehicleStatus::Active: return "active";
    case VehicleStatus::Crashed: return "crashed";
    case VehicleStatus::Parked: return "parked";
  }
  return "active";
}

int status_code(VehicleStatus s) noexcept {
  switch (s) {
    case VehicleStatus::Active: return 0;
    case VehicleStatus::Crashed: return 1;
    case VehicleStatus::Parked: return 2;
  }
  return 0;
}

std::string_view to_string(LogChannel c) noexcept {
  switch (c) {
    case LogChannel::Position: return "position";
    case LogChannel::Velocity: return "velocity";
    case LogChannel::ControlInput: return "control_input";
    case LogChannel::Status: return "status";
  }
  return "position";
}

std::optional<LogChannel> parse_log_channel(std::string_view text) noexcept {
  for (auto c : {LogChannel::Position, LogChannel::Velocity, LogChannel::ControlInput, LogChannel::Status})
    if (to_string(c) == text) return c;
  return std::nullopt;
}

std::vector<LogRecord> log(const LogConfig& config, std::uint64_t step_index, double t, double dt,
                           const std::vector<const Vehicle*>& vehicles) {
  std::vector<LogRecord> out;
  if (t < config.t_start - kTimeTol || t > config.t_end + kTimeTol) return out;
  const auto stride =
      config.sample_period > 0.0 ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(config.sample_period / dt))) : 1;
  if (step_index % stride != 0) return out;
  for (const Vehicle* v : vehicles) {
    for (LogChannel c : config.channels) {
      if (v->status == VehicleStatus::Parked && c != LogChannel::Status) continue;
      LogRecord r{t, v->id, c, {}};
      switch (c) {
        case LogChannel::Position: r.values = {v->state.x, v->state.y, v->state.theta}; break;
        case LogChannel::Velocity: r.values = {v->state.v}; break;
        case LogChannel::ControlInput: r.values = {v->last_input.a, v->last_input.delta}; break;
        case LogChannel::Status: r.values = {static_cast<double>(status_code(v->status))}; break;
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

VehicleStatus classify_status(const Vehicle& vehicle, const RoadNetwork& network, double margin, bool exited,
                              bool has_parking_lot) {
  if (exited && has_parking_lot) return VehicleStatus::Parked;
  if (!network.query_road(vehicle.state.position(), margin)) return VehicleStatus::Crashed;
  return VehicleStatus::Active;
}

// --- TrafficEnvironment ------------------------------------------------------

TrafficEnvironment::TrafficEnvironment(RoadNetwork network, EngineConfig config)
    : network_(std::move(network)), config_(config) {
  if (!(config_.dt > 0.0) || !std::isfinite(config_.dt))
    throw SimError(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(config_.vehicle_width > 0.0) || !(config_.min_spawn_gap >= 0.0) || !(config_.trajectory_spacing > 0.0) ||
      config_.horizon_segments < 1)
    throw SimError(ErrorCode::InvalidArgument, "invalid engine configuration");
}

void TrafficEnvironment::create_vehicle(VehicleId id, std::unique_ptr<DynamicsModel> dynamics,
                                        ControllerSet controllers, SensorConfig sensor,
                                        std::deque<RoutePrimitive> route) {
  if (vehicles_.count(id)) throw SimError(ErrorCode::DuplicateId, "vehicle " + std::to_string(id.value) + " exists");
  const bool combined = controllers.combined != nullptr;
  const bool split = controllers.lateral != nullptr || controllers.longitudinal != nullptr;
  const bool full_split = controllers.lateral != nullptr && controllers.longitudinal != nullptr;
  if (combined == split || (split && !full_split))
    throw SimError(ErrorCode::ControllerAmbiguity,
                   "give either a combined controller or a lateral and longitudinal pair");
  if (!dynamics) throw SimError(ErrorCode::InvalidArgument, "vehicle needs a dynamics model");
  validate(sensor);

  Vehicle v;
  v.id = id;
  v.dynamics = std::move(dynamics);
  v.controllers = std::move(controllers);
  v.sensor = sensor;
  v.route.pending = std::move(route);
  v.noise = seeded_engine(config_.seed, static_cast<std::uint32_t>(id.value), 0x5e45u);
  v.last_perception.ego_id = id;
  vehicles_.emplace(id, std::move(v));
}

const Vehicle& TrafficEnvironment::vehicle(VehicleId id) const {
  auto it = vehicles_.find(id);
  if (it == vehicles_.end()) throw SimError(ErrorCode::UnknownVehicle, "no vehicle " + std::to_string(id.value));
  return it->second;
}

Vehicle& TrafficEnvironment::mutable_vehicle(VehicleId id) {
  auto it = vehicles_.find(id);
  if (it == vehicles_.end()) throw SimError(ErrorCode::UnknownVehicle, "no vehicle " + std::to_string(id.value));
  return it->second;
}

std::vector<const Vehicle*> TrafficEnvironment::vehicles() const {
  std::vector<const Vehicle*> out;
  out.reserve(vehicles_.size());
  for (const auto& [id, v] : vehicles_) out.push_back(&v);
  return out;
}

std::size_t TrafficEnvironment::count(VehicleStatus status) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(vehicles_.begin(), vehicles_.end(), [&](const auto& kv) { return kv.second.status == status; }));
}

std::size_t TrafficEnvironment::lot_occupancy() const noexcept {
  return lot_ ? lot_->forming.size() + lot_->pending.size() : 0;
}

bool TrafficEnvironment::spawn_blocked(const Vec2& position, VehicleId except) const {
  for (const auto& [id, v] : vehicles_) {
    if (id == except || v.status != VehicleStatus::Active) continue;
    if (distance(v.state.position(), position) < config_.min_spawn_gap) return true;
  }
  return false;
}

void TrafficEnvironment::enter_segment(Vehicle& v, SegmentId segment, const std::string& entry,
                                       StepReport& report) {
  const std::size_t faults = enter_route_segment(v.route, v.tracked_lane, network_, segment, entry);
  v.route_faults += faults;
  report.route_faults += faults;
}

void TrafficEnvironment::place(Vehicle& v, SegmentId segment, const std::string& entry, int lane, double offset,
                               double speed) {
  const RoadSegment& seg = network_.segment(segment);
  if (lane < 1 || lane > seg.spec().lanes)
    throw SimError(ErrorCode::OffRoadSpawn, "lane " + std::to_string(lane) + " is not on segment " +
                                                std::to_string(segment.value));
  seg.port(entry);
  RouteState route = v.route;
  route.current_lane = lane;
  route.last_consumed_segment.reset();
  int tracked = lane;
  const std::size_t faults = enter_route_segment(route, tracked, network_, segment, entry);

  const Path path = seg.route_path(route.entry_port, route.exit_port, lane);
  if (!(offset >= 0.0) || offset > path.length() + 1e-9)
    throw SimError(ErrorCode::OffRoadSpawn, "offset " + std::to_string(offset) + " m is outside segment " +
                                                std::to_string(segment.value));
  const Pose2D pose = path.pose_at(offset);
  if (!network_.query_road(pose.position()))
    throw SimError(ErrorCode::OffRoadSpawn, "spawn pose is not on the road");
  if (spawn_blocked(pose.position(), v.id))
    throw SimError(ErrorCode::SpawnConflict,
                   "another vehicle is within " + std::to_string(config_.min_spawn_gap) + " m of the spawn point");

  v.route = std::move(route);
  v.route_faults += faults;
  v.tracked_lane = lane;
  v.state = {pose.x(), pose.y(), pose.theta(), speed};
  v.state = v.dynamics->project(v.state);
  v.last_input = {};
  v.reference = {};
  v.status = VehicleStatus::Active;
}

void TrafficEnvironment::add_vehicle_to_segment(VehicleId id, SegmentId segment, int lane, double offset,
                                                double speed, const std::string& entry) {
  Vehicle& v = mutable_vehicle(id);
  if (v.status != VehicleStatus::Parked)
    throw SimError(ErrorCode::InvalidArgument, "vehicle " + std::to_string(id.value) + " is already on the road");
  const RoadSegment& seg = network_.segment(segment);
  const std::string from = !entry.empty() ? entry : seg.type() == SegmentType::Intersection ? "west" : "start";
  place(v, segment, from, lane, offset, speed);
}

void TrafficEnvironment::create_virtual_parking_lot(ParkingLotConfig config) {
  if (config.platoon_size < 1) throw SimError(ErrorCode::InvalidArgument, "platoon_size must be >= 1");
  if (!(config.time_variance >= 0.0) || !(config.time_sequence_interval >= 0.0) || !std::isfinite(config.time_mean))
    throw SimError(ErrorCode::InvalidArgument, "invalid parking lot timing");
  if (config.exit_points.empty()) throw SimError(ErrorCode::InvalidArgument, "parking lot needs an exit point");
  for (const auto& p : config.exit_points) {
    if (network_.peer(p))
      throw SimError(ErrorCode::InvalidArgument, "exit point " + std::to_string(p.segment.value) + "/" + p.name +
                                                     " is not an open end");
  }
  lot_ = LotRuntime{std::move(config), {}, {}, seeded_engine(config_.seed, 0xfffffffeu, 0x107u)};
}

void TrafficEnvironment::admit_to_parking_lot(VehicleId id) {
  if (!lot_) throw SimError(ErrorCode::InvalidArgument, "no parking lot configured");
  const Vehicle& v = vehicle(id);
  const bool queued = std::find(lot_->forming.begin(), lot_->forming.end(), id) != lot_->forming.end() ||
                      std::any_of(lot_->pending.begin(), lot_->pending.end(),
                                  [&](const PendingEntry& e) { return e.vehicle == id; });
  if (v.status != VehicleStatus::Parked || queued)
    throw SimError(ErrorCode::InvalidArgument, "vehicle " + std::to_string(id.value) + " cannot enter the lot");
  lot_->forming.push_back(id);
}

void TrafficEnvironment::set_log_config(LogConfig config) {
  if (config.t_end < config.t_start) throw SimError(ErrorCode::InvalidArgument, "log interval is reversed");
  if (config.sample_period < 0.0) throw SimError(ErrorCode::InvalidArgument, "sample_period must be >= 0");
  if (config.sample_period > 0.0) {
    const double k = std::round(config.sample_period / config_.dt);
    if (k < 1.0 || std::abs(k * config_.dt - config.sample_period) > 1e-9 * std::max(1.0, config.sample_period))
      throw SimError(ErrorCode::InvalidArgument, "sample_period must be an integer multiple of dt");
  }
  log_config_ = std::move(config);
}

void TrafficEnvironment::set_platoon_params(PlatoonParams params) {
  validate(params.follow);
  if (!(params.merge_ramp_time >= 0.0)) throw SimError(ErrorCode::InvalidArgument, "merge_ramp_time must be >= 0");
  const double lane_width = network_.empty() ? 3.5 : network_.segments().begin()->second.spec().lane_width;
  coordinator_ = PlatoonCoordinator(params, lane_width);
}

void TrafficEnvironment::schedule_directive(double t, VehicleId vehicle, std::optional<PlatoonDirective> directive) {
  if (!std::isfinite(t)) throw SimError(ErrorCode::InvalidArgument, "directive time must be finite");
  if (started_ && t < time() - kTimeTol)
    throw SimError(ErrorCode::InvalidArgument, "cannot schedule a directive in the past");
  auto events = directive_events_;
  const std::size_t order = events.size();
  auto pos = std::upper_bound(events.begin(), events.end(), t,
                              [](double value, const DirectiveEvent& e) { return value < e.t; });
  events.insert(pos, DirectiveEvent{t, order, vehicle, std::move(directive)});

  std::map<VehicleId, PlatoonDirective> replay;
  for (const auto& e : events) {
    if (e.directive)
      replay[e.vehicle] = *e.directive;
    else
      replay.erase(e.vehicle);
    check_leadership_forest(replay);
  }
  directive_events_ = std::move(events);
}

void TrafficEnvironment::apply_directives(double t) {
  while (next_directive_event_ < directive_events_.size() &&
         directive_events_[next_directive_event_].t <= t + kTimeTol) {
    const auto& e = directive_events_[next_directive_event_++];
    if (e.directive)
      directives_[e.vehicle] = *e.directive;
    else
      directives_.erase(e.vehicle);
  }
}

std::vector<VehicleId> TrafficEnvironment::iteration_order() const {
  std::vector<VehicleId> ids;
  for (const auto& [id, v] : vehicles_)
    if (v.status == VehicleStatus::Active) ids.push_back(id);
  if (config_.reverse_iteration) std::reverse(ids.begin(), ids.end());
  return ids;
}

std::optional<int> TrafficEnvironment::travel_lane(const VehicleState& state) const {
  const auto q = network_.query_road(state.position(), crash_margin(config_));
  if (!q) return std::nullopt;
  if (std::cos(state.theta - q->forward_heading) < 0.0) return q->lanes + 1 - q->lane;
  return q->lane;
}

TrafficEnvironment::Snapshot TrafficEnvironment::take_snapshot() const {
  Snapshot snap;
  for (const auto& [id, v] : vehicles_) {
    if (v.status == VehicleStatus::Parked) continue;
    snap.states.emplace(id, v.state);
    snap.lanes.emplace(id, travel_lane(v.state));
  }
  return snap;
}

bool TrafficEnvironment::update_route(Vehicle& v, StepReport& report) {
  // A short segment can be crossed entirely within one step.
  for (std::size_t guard = 0; guard <= network_.segments().size(); ++guard) {
    const RoadSegment& seg = network_.segment(*v.route.current_segment);
    const Path path = seg.route_path(v.route.entry_port, v.route.exit_port, v.tracked_lane);
    if (path.project(v.state.position()).overrun <= 0.0) return false;
    const auto next = network_.peer({seg.id(), v.route.exit_port});
    if (!next) return true;
    enter_segment(v, next->segment, next->name, report);
  }
  return false;
}

void TrafficEnvironment::rebuild_reference(Vehicle& v) {
  RouteState route = v.route;
  route.current_lane = v.tracked_lane;
  try {
    const Trajectory full = build_reference(route, network_, config_.horizon_segments, config_.trajectory_spacing);
    v.reference = preprocess(full, v.state.pose());
  } catch (const SimError& e) {
    if (!is_route_fault(e.code())) throw;
    v.reference = {};
  }
}

void TrafficEnvironment::set_status(Vehicle& v, VehicleStatus to, StepReport& report) {
  if (v.status == to) return;
  report.transitions.push_back({v.id, v.status, to});
  v.status = to;
}

void TrafficEnvironment::emit_logs(StepReport& report) const {
  auto records = log(log_config_, step_index_, time(), config_.dt, vehicles());
  report.records.insert(report.records.end(), std::make_move_iterator(records.begin()),
                        std::make_move_iterator(records.end()));
}

void TrafficEnvironment::parking_lot_tick(StepReport& report) {
  if (!lot_) return;
  LotRuntime& lot = *lot_;
  const double t = time();
  const auto size = static_cast<std::size_t>(lot.config.platoon_size);
  while (lot.forming.size() >= size) {
    std::vector<VehicleId> members(lot.forming.begin(), lot.forming.begin() + static_cast<std::ptrdiff_t>(size));
    lot.forming.erase(lot.forming.begin(), lot.forming.begin() + static_cast<std::ptrdiff_t>(size));
    double delay = lot.config.time_mean;
    if (lot.config.time_variance > 0.0)
      delay = std::normal_distribution<double>(lot.config.time_mean, std::sqrt(lot.config.time_variance))(lot.rng);
    delay = std::max(0.0, delay);
    const auto& exits = lot.config.exit_points;
    const PortRef exit = exits[std::uniform_int_distribution<std::size_t>(0, exits.size() - 1)(lot.rng)];
    const double release = t + delay;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const double at = release + static_cast<double>(k) * lot.config.time_sequence_interval;
      lot.pending.push_back({at, at, members[k], exit});
    }
    PlatoonRelease r{t, release, exit, members};
    report.scheduled.push_back(r);
    release_history_.push_back(std::move(r));
  }

  for (auto it = lot.pending.begin(); it != lot.pending.end();) {
    if (it->time > t + kTimeTol) {
      ++it;
      continue;
    }
    Vehicle& v = mutable_vehicle(it->vehicle);
    const RoadSegment& seg = network_.segment(it->exit.segment);
    v.route = RouteState{};
    try {
      place(v, seg.id(), it->exit.name, 1, 0.0, seg.spec().speed_limit);
    } catch (const SimError& e) {
      if (e.code() != ErrorCode::SpawnConflict) throw;
      report.blocked_exits.push_back(v.id);
      it->time = t + config_.dt;
      ++it;
      continue;
    }
    report.transitions.push_back({v.id, VehicleStatus::Parked, VehicleStatus::Active});
    report.releases.push_back({v.id, it->scheduled_at, t, it->exit});
    it = lot.pending.erase(it);
  }
}

StepReport TrafficEnvironment::step() {
  StepReport report;
  if (!started_) {
    started_ = true;
    emit_logs(report);
  }
  const double t = time();
  const double dt = config_.dt;
  apply_directives(t);
  const Snapshot snap = take_snapshot();
  const auto order = iteration_order();

  // Phase 1: reference trajectories. Segment hand-over happens right after
  // integration so that exits through open ends are seen by classification.
  for (VehicleId id : order) rebuild_reference(mutable_vehicle(id));

  // Phase 2: perception against the frozen snapshot.
  for (VehicleId id : order) {
    Vehicle& v = mutable_vehicle(id);
    std::vector<OtherVehicle> others;
    for (const auto& [oid, state] : snap.states)
      if (oid != id) others.push_back({oid, state, snap.lanes.at(oid)});
    v.last_perception = add_noise(sense({id, snap.states.at(id)}, others, v.sensor, t), v.noise, v.sensor);
  }

  // Phase 3: platoon supervision, lane-change gating, controllers.
  std::map<VehicleId, PlatoonMember> members;
  for (const auto& [id, directive] : directives_) {
    auto it = vehicles_.find(id);
    if (it != vehicles_.end() && it->second.status == VehicleStatus::Active)
      members.emplace(id, PlatoonMember{it->second.state, it->second.last_perception});
  }
  const auto overrides = coordinator_.platoon_step(directives_, members, t);

  for (VehicleId id : order) {
    Vehicle& v = mutable_vehicle(id);
    if (v.tracked_lane != v.route.current_lane &&
        lane_change_supervisor(v.state, v.last_perception, v.route, config_.lane_change) ==
            LaneChangeDecision::Proceed) {
      v.tracked_lane = v.route.current_lane;
      rebuild_reference(v);
    }
    const ControlInput fallback = v.dynamics->saturate({-std::numeric_limits<double>::max(), 0.0});
    ControlInput u = fallback;
    if (!v.reference.empty()) {
      auto ov = overrides.find(id);
      const ControllerContext ctx{id,
                                  v.state,
                                  v.last_perception,
                                  v.reference,
                                  t,
                                  network_.segment(*v.route.current_segment).spec().lane_width,
                                  ov == overrides.end() ? std::nullopt : std::optional<AccParams>(ov->second)};
      try {
        if (v.controllers.combined)
          u = v.controllers.combined->compute(ctx);
        else
          u = {v.controllers.longitudinal->acceleration(ctx), v.controllers.lateral->steering(ctx)};
      } catch (const SimError& e) {
        if (!is_route_fault(e.code())) throw;
        u = fallback;
      }
    }
    v.last_input = v.dynamics->saturate(u);
  }

  // Phase 4: integrate every active vehicle from its snapshot state.
  std::vector<VehicleId> diverged;
  for (VehicleId id : order) {
    Vehicle& v = mutable_vehicle(id);
    try {
      v.state = integrate_step(*v.dynamics, snap.states.at(id), v.last_input, t, dt);
    } catch (const SimError& e) {
      if (e.code() != ErrorCode::NonFiniteState) throw;
      diverged.push_back(id);
    }
  }
  std::sort(diverged.begin(), diverged.end());

  ++step_index_;
  report.step_index = step_index_;
  report.t = time();

  // Classification always runs in ascending id order so the lot queue is
  // independent of the evaluation order.
  for (auto& [id, v] : vehicles_) {
    if (v.status != VehicleStatus::Active) continue;
    if (std::binary_search(diverged.begin(), diverged.end(), id)) {
      set_status(v, VehicleStatus::Crashed, report);
      continue;
    }
    const bool exited = update_route(v, report);
    const VehicleStatus next = classify_status(v, network_, crash_margin(config_), exited, lot_.has_value());
    if (next == VehicleStatus::Parked) {
      v.reference = {};
      lot_->forming.push_back(id);
    }
    set_status(v, next, report);
  }
  parking_lot_tick(report);
  emit_logs(report);
  return report;
}

}  // namespace platoonsim
