#include "platoonsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "platoonsim/error.hpp"

namespace platoonsim {

namespace {

constexpr double kDeg = kPi / 180.0;

[[noreturn]] void invalid(const std::string& path, const std::string& what, const YAML::Mark& mark = YAML::Mark::null_mark()) {
  std::string msg = path.empty() ? what : path + ": " + what;
  if (!mark.is_null()) msg += fmt::format(" (line {}, column {})", mark.line + 1, mark.column + 1);
  throw SimError(ErrorCode::ValidationError, msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

// Read access to one YAML mapping that remembers where it lives, so every
// error can name the key.
class Node {
 public:
  Node(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }
  const YAML::Node& raw() const noexcept { return node_; }
  bool has(const std::string& key) const { return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull(); }

  Node child(const std::string& key) const {
    if (!has(key)) invalid(join(path_, key), "missing required key", node_.Mark());
    return {node_[key], join(path_, key)};
  }

  Node map(const std::string& key, std::initializer_list<const char*> allowed) const {
    Node c = child(key);
    c.expect_map(allowed);
    return c;
  }

  std::vector<Node> list(const std::string& key) const {
    std::vector<Node> out;
    if (!has(key)) return out;
    const YAML::Node seq = node_[key];
    if (!seq.IsSequence()) invalid(join(path_, key), "expected a list", seq.Mark());
    for (std::size_t i = 0; i < seq.size(); ++i) out.emplace_back(seq[i], index(join(path_, key), i));
    return out;
  }

  void expect_map(std::initializer_list<const char*> allowed) const {
    if (!node_.IsMap()) invalid(path_, "expected a mapping", node_.Mark());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        invalid(join(path_, key), "unknown key", kv.first.Mark());
    }
  }

  template <class T>
  T as() const {
    try {
      return node_.as<T>();
    } catch (const YAML::Exception&) {
      invalid(path_, "has the wrong type", node_.Mark());
    }
  }

  template <class T>
  T get(const std::string& key) const {
    return child(key).as<T>();
  }

  template <class T>
  T get_or(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  double finite(const std::string& key) const {
    const double v = get<double>(key);
    if (!std::isfinite(v)) invalid(join(path_, key), "must be finite", node_[key].Mark());
    return v;
  }

  double finite_or(const std::string& key, double fallback) const { return has(key) ? finite(key) : fallback; }

  /// Angle given as `<base>_deg` or `<base>_rad`; exactly one may be present.
  std::optional<double> angle(const std::string& base) const {
    const bool deg = has(base + "_deg");
    const bool rad = has(base + "_rad");
    if (deg && rad) invalid(join(path_, base), "give either " + base + "_deg or " + base + "_rad, not both", node_.Mark());
    if (deg) return finite(base + "_deg") * kDeg;
    if (rad) return finite(base + "_rad");
    return std::nullopt;
  }

 private:
  YAML::Node node_;
  std::string path_;
};

// Deep-merges `over` on top of `base` (mappings only; everything else replaces).
YAML::Node merged(const YAML::Node& base, const YAML::Node& over) {
  if (!over.IsDefined() || over.IsNull()) return YAML::Clone(base);
  if (!base.IsDefined() || base.IsNull() || !base.IsMap() || !over.IsMap()) return YAML::Clone(over);
  YAML::Node out = YAML::Clone(base);
  for (const auto& kv : over) {
    const auto key = kv.first.as<std::string>();
    out[key] = merged(base[key], kv.second);
  }
  return out;
}

PortRef port_ref(const Node& n) {
  const YAML::Node& raw = n.raw();
  if (raw.IsSequence() && raw.size() == 2) {
    try {
      return {SegmentId{raw[0].as<int>()}, raw[1].as<std::string>()};
    } catch (const YAML::Exception&) {
      invalid(n.path(), "expected [segment_id, connection_point]", raw.Mark());
    }
  }
  n.expect_map({"segment_id", "connection_point"});
  return {SegmentId{n.get<int>("segment_id")}, n.get<std::string>("connection_point")};
}

SegmentType segment_type(const Node& n) {
  const auto text = n.as<std::string>();
  if (text == "straight" || text == "1") return SegmentType::Straight;
  if (text == "curved" || text == "2") return SegmentType::Curved;
  if (text == "intersection" || text == "3") return SegmentType::Intersection;
  invalid(n.path(), "unknown segment type '" + text + "'", n.raw().Mark());
}

std::string_view to_string(SegmentType t) {
  switch (t) {
    case SegmentType::Straight: return "straight";
    case SegmentType::Curved: return "curved";
    case SegmentType::Intersection: return "intersection";
  }
  return "straight";
}

Vec2 vec2(const Node& n) {
  const YAML::Node& raw = n.raw();
  if (!raw.IsSequence() || raw.size() != 2) invalid(n.path(), "expected [x, y]", raw.Mark());
  try {
    return {raw[0].as<double>(), raw[1].as<double>()};
  } catch (const YAML::Exception&) {
    invalid(n.path(), "expected [x, y]", raw.Mark());
  }
}

SegmentEntry parse_segment(const Node& n) {
  n.expect_map({"id", "segment_type", "length", "radius", "sweep_deg", "sweep_rad", "orientation_deg",
                "orientation_rad", "lanes", "lane_width", "speed_limit", "origin"});
  SegmentEntry e;
  e.id = SegmentId{n.get<int>("id")};
  SegmentSpec& s = e.spec;
  s.type = segment_type(n.child("segment_type"));
  const auto orientation = n.angle("orientation");
  if (!orientation) invalid(join(n.path(), "orientation"), "orientation_deg or orientation_rad is required", n.raw().Mark());
  s.orientation = *orientation;
  s.lanes = n.get<int>("lanes");
  s.lane_width = n.finite("lane_width");
  s.speed_limit = n.finite("speed_limit");
  if (n.has("origin")) s.origin = vec2(n.child("origin"));
  switch (s.type) {
    case SegmentType::Straight:
    case SegmentType::Intersection:
      s.length = n.finite("length");
      break;
    case SegmentType::Curved: {
      s.radius = n.finite("radius");
      const auto sweep = n.angle("sweep");
      if (!sweep) invalid(join(n.path(), "sweep"), "sweep_deg or sweep_rad is required", n.raw().Mark());
      s.sweep = *sweep;
      break;
    }
  }
  try {
    validate(s);
  } catch (const SimError& err) {
    invalid(n.path(), err.what(), n.raw().Mark());
  }
  return e;
}

BicycleParams parse_dynamics(const Node& n) {
  n.expect_map({"wheelbase", "delta_max", "v_max", "a_min", "a_max"});
  BicycleParams p;
  p.wheelbase = n.finite_or("wheelbase", p.wheelbase);
  p.delta_max = n.finite_or("delta_max", p.delta_max);
  p.v_max = n.finite_or("v_max", p.v_max);
  p.a_min = n.finite_or("a_min", p.a_min);
  p.a_max = n.finite_or("a_max", p.a_max);
  try {
    validate(p);
  } catch (const SimError& err) {
    invalid(n.path(), err.what(), n.raw().Mark());
  }
  return p;
}

AccParams parse_acc(const Node& n, AccParams p = {}) {
  n.expect_map({"d0", "h", "k_g", "k_v", "cruise_speed"});
  p.d0 = n.finite_or("d0", p.d0);
  p.h = n.finite_or("h", p.h);
  p.k_g = n.finite_or("k_g", p.k_g);
  p.k_v = n.finite_or("k_v", p.k_v);
  p.cruise_speed = n.finite_or("cruise_speed", p.cruise_speed);
  try {
    validate(p);
  } catch (const SimError& err) {
    invalid(n.path(), err.what(), n.raw().Mark());
  }
  return p;
}

ControllerSpec parse_controller(const Node& n, double wheelbase) {
  n.expect_map({"type", "pure_pursuit", "acc", "comfort_decel"});
  ControllerSpec c;
  const auto type = n.get_or<std::string>("type", "pure_pursuit_acc");
  if (type == "pure_pursuit_acc")
    c.kind = ControllerKind::PurePursuitAcc;
  else if (type == "zero")
    c.kind = ControllerKind::Zero;
  else
    invalid(join(n.path(), "type"), "unknown controller '" + type + "'", n.raw()["type"].Mark());
  if (n.has("pure_pursuit")) {
    const Node pp = n.map("pure_pursuit", {"lookahead_base", "lookahead_gain"});
    c.pure_pursuit.lookahead_base = pp.finite_or("lookahead_base", c.pure_pursuit.lookahead_base);
    c.pure_pursuit.lookahead_gain = pp.finite_or("lookahead_gain", c.pure_pursuit.lookahead_gain);
  }
  c.pure_pursuit.wheelbase = wheelbase;
  try {
    validate(c.pure_pursuit);
  } catch (const SimError& err) {
    invalid(join(n.path(), "pure_pursuit"), err.what(), n.raw().Mark());
  }
  if (n.has("acc")) c.acc = parse_acc(n.child("acc"));
  c.comfort_decel = n.finite_or("comfort_decel", c.comfort_decel);
  if (!(c.comfort_decel > 0.0)) invalid(join(n.path(), "comfort_decel"), "must be > 0", n.raw().Mark());
  return c;
}

SensorConfig parse_sensor(const Node& n) {
  n.expect_map({"fov_deg", "fov_rad", "range", "noise_sigma_pos", "noise_sigma_vel"});
  SensorConfig s;
  if (const auto fov = n.angle("fov")) s.fov = *fov;
  s.range = n.finite_or("range", s.range);
  s.noise_sigma_pos = n.finite_or("noise_sigma_pos", s.noise_sigma_pos);
  s.noise_sigma_vel = n.finite_or("noise_sigma_vel", s.noise_sigma_vel);
  try {
    validate(s);
  } catch (const SimError& err) {
    invalid(n.path(), err.what(), n.raw().Mark());
  }
  return s;
}

VehicleSpec parse_vehicle(const Node& n) {
  n.expect_map({"id", "dynamics", "controller", "sensor", "route", "placement"});
  VehicleSpec v;
  v.id = n.get<int>("id");
  if (n.has("dynamics")) v.dynamics = parse_dynamics(n.child("dynamics"));
  if (n.has("controller")) {
    v.controller = parse_controller(n.child("controller"), v.dynamics.wheelbase);
  } else {
    v.controller.pure_pursuit.wheelbase = v.dynamics.wheelbase;
  }
  if (n.has("sensor")) v.sensor = parse_sensor(n.child("sensor"));
  for (const Node& step : n.list("route")) {
    const auto p = parse_route_primitive(step.as<std::string>());
    if (!p) invalid(step.path(), "unknown route primitive '" + step.as<std::string>() + "'", step.raw().Mark());
    v.route.push_back(*p);
  }
  if (n.has("placement")) {
    const Node p = n.map("placement", {"segment", "lane", "offset", "speed", "entry"});
    PlacementSpec pl;
    pl.segment = SegmentId{p.get<int>("segment")};
    pl.lane = p.get_or<int>("lane", 1);
    pl.offset = p.finite_or("offset", 0.0);
    pl.speed = p.finite_or("speed", 0.0);
    pl.entry = p.get_or<std::string>("entry", "");
    v.placement = pl;
  }
  return v;
}

PlatoonEvent parse_event(const Node& n) {
  n.expect_map({"t", "vehicle", "follow", "split", "merge", "clear"});
  PlatoonEvent e;
  e.t = n.finite("t");
  e.vehicle = n.get<int>("vehicle");
  const int kinds = n.has("follow") + n.has("split") + n.has("merge") + n.has("clear");
  if (kinds != 1) invalid(n.path(), "give exactly one of follow, split, merge, clear", n.raw().Mark());
  if (n.has("follow")) e.directive = PlatoonDirective{Follow{VehicleId{n.get<int>("follow")}}};
  if (n.has("merge")) e.directive = PlatoonDirective{Merge{VehicleId{n.get<int>("merge")}}};
  if (n.has("split")) {
    const double gap = n.finite("split");
    if (!(gap > 0.0)) invalid(join(n.path(), "split"), "gap target must be > 0", n.raw().Mark());
    e.directive = PlatoonDirective{Split{gap}, PlatoonRole::Leader};
  }
  return e;
}

ScenarioSpec parse_document(const YAML::Node& doc) {
  const Node root(doc, "");
  root.expect_map({"meta", "engine", "segments", "connections", "auto_connections", "parking_lot", "vehicle_defaults",
                   "vehicles", "platoon", "logging"});
  ScenarioSpec spec;

  const Node meta = root.map("meta", {"name", "seed", "TIME_STEP", "SIMULATION_DURATION", "SAVE_VIDEO", "fps", "resolution"});
  spec.meta.name = meta.get_or<std::string>("name", spec.meta.name);
  spec.meta.seed = meta.get_or<std::uint64_t>("seed", 0);
  spec.meta.time_step = meta.finite("TIME_STEP");
  spec.meta.duration = meta.finite("SIMULATION_DURATION");
  spec.meta.save_video = meta.get_or<bool>("SAVE_VIDEO", false);
  spec.meta.fps = meta.finite_or("fps", spec.meta.fps);
  if (meta.has("resolution")) {
    const Node res = meta.child("resolution");
    if (!res.raw().IsSequence() || res.raw().size() != 2) invalid(res.path(), "expected [width, height]", res.raw().Mark());
    spec.meta.width = Node(res.raw()[0], index(res.path(), 0)).as<int>();
    spec.meta.height = Node(res.raw()[1], index(res.path(), 1)).as<int>();
  }

  spec.engine.dt = spec.meta.time_step;
  spec.engine.seed = spec.meta.seed;
  if (root.has("engine")) {
    const Node e = root.map("engine", {"vehicle_width", "vehicle_length", "min_spawn_gap", "trajectory_spacing",
                                       "horizon_segments", "lane_change"});
    spec.engine.vehicle_width = e.finite_or("vehicle_width", spec.engine.vehicle_width);
    spec.engine.vehicle_length = e.finite_or("vehicle_length", spec.engine.vehicle_length);
    spec.engine.min_spawn_gap = e.finite_or("min_spawn_gap", spec.engine.min_spawn_gap);
    spec.engine.trajectory_spacing = e.finite_or("trajectory_spacing", spec.engine.trajectory_spacing);
    spec.engine.horizon_segments = e.get_or<int>("horizon_segments", spec.engine.horizon_segments);
    if (e.has("lane_change")) {
      const Node lc = e.map("lane_change", {"lead_clear", "lag_clear"});
      spec.engine.lane_change.lead_clear = lc.finite_or("lead_clear", spec.engine.lane_change.lead_clear);
      spec.engine.lane_change.lag_clear = lc.finite_or("lag_clear", spec.engine.lane_change.lag_clear);
    }
  }

  for (const Node& s : root.list("segments")) spec.segments.push_back(parse_segment(s));
  for (const Node& c : root.list("connections")) {
    c.expect_map({"fixed", "moving"});
    spec.connections.push_back({port_ref(c.child("fixed")), port_ref(c.child("moving"))});
  }
  for (const Node& c : root.list("auto_connections")) {
    c.expect_map({"from", "to", "r_min"});
    spec.auto_connections.push_back({port_ref(c.child("from")), port_ref(c.child("to")), c.finite("r_min")});
  }

  if (root.has("parking_lot")) {
    const Node p = root.map("parking_lot", {"platoon_size", "time_mean", "time_variance", "time_sequence_interval",
                                            "exit_points"});
    ParkingLotConfig lot;
    lot.platoon_size = p.get<int>("platoon_size");
    lot.time_mean = p.finite("time_mean");
    lot.time_variance = p.finite_or("time_variance", 0.0);
    lot.time_sequence_interval = p.finite_or("time_sequence_interval", 0.0);
    for (const Node& e : p.list("exit_points")) lot.exit_points.push_back(port_ref(e));
    spec.parking_lot = lot;
  }

  YAML::Node defaults;
  if (root.has("vehicle_defaults")) {
    root.map("vehicle_defaults", {"dynamics", "controller", "sensor"});
    defaults = doc["vehicle_defaults"];
  }
  for (const Node& v : root.list("vehicles")) spec.vehicles.push_back(parse_vehicle(Node(merged(defaults, v.raw()), v.path())));

  if (root.has("platoon")) {
    const Node p = root.map("platoon", {"follow", "merge_ramp_time", "events"});
    PlatoonSpec ps;
    if (p.has("follow")) ps.params.follow = parse_acc(p.child("follow"));
    ps.params.merge_ramp_time = p.finite_or("merge_ramp_time", ps.params.merge_ramp_time);
    for (const Node& e : p.list("events")) ps.events.push_back(parse_event(e));
    spec.platoon = ps;
  }

  if (root.has("logging")) {
    const Node l = root.map("logging", {"channels", "interval", "sample_period"});
    if (l.has("channels")) {
      spec.logging.channels.clear();
      for (const Node& c : l.list("channels")) {
        const auto ch = parse_log_channel(c.as<std::string>());
        if (!ch) invalid(c.path(), "unknown log channel '" + c.as<std::string>() + "'", c.raw().Mark());
        spec.logging.channels.insert(*ch);
      }
    }
    if (l.has("interval")) {
      const Vec2 iv = vec2(l.child("interval"));
      spec.logging.t_start = iv.x;
      spec.logging.t_end = iv.y;
    }
    spec.logging.sample_period = l.finite_or("sample_period", 0.0);
  }
  validate_scenario(spec);
  return spec;
}

bool is_multiple(double value, double quantum) {
  const double k = std::round(value / quantum);
  return std::abs(k * quantum - value) <= 1e-9 * std::max(1.0, std::abs(value));
}

// --- serialization ---------------------------------------------------------------

// Shortest text that reads back to the same double.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  return fmt::format("{}", v);
}

void emit_port(YAML::Emitter& out, const PortRef& p) {
  out << YAML::Flow << YAML::BeginSeq << p.segment.value << p.name << YAML::EndSeq;
}

void emit_acc(YAML::Emitter& out, const AccParams& p) {
  out << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "d0" << YAML::Value << num(p.d0) << YAML::Key << "h" << YAML::Value << num(p.h);
  out << YAML::Key << "k_g" << YAML::Value << num(p.k_g) << YAML::Key << "k_v" << YAML::Value << num(p.k_v);
  out << YAML::Key << "cruise_speed" << YAML::Value << num(p.cruise_speed);
  out << YAML::EndMap;
}

}  // namespace

std::uint64_t step_count(const MetaSpec& meta) {
  return static_cast<std::uint64_t>(std::llround(meta.duration / meta.time_step));
}

std::uint64_t frame_stride(const MetaSpec& meta) {
  return static_cast<std::uint64_t>(std::max(1LL, std::llround(1.0 / (meta.fps * meta.time_step))));
}

void validate_scenario(const ScenarioSpec& spec) {
  const MetaSpec& m = spec.meta;
  if (!(m.time_step > 0.0)) invalid("meta.TIME_STEP", "must be > 0");
  if (!(m.duration >= 0.0)) invalid("meta.SIMULATION_DURATION", "must be >= 0");
  if (!is_multiple(m.duration, m.time_step)) invalid("meta.SIMULATION_DURATION", "must be an integer multiple of TIME_STEP");
  if (!(m.fps > 0.0)) invalid("meta.fps", "must be > 0");
  if (m.fps > 1.0 / m.time_step + 1e-9) invalid("meta.fps", "must not exceed 1 / TIME_STEP");
  if (!is_multiple(1.0 / m.fps, m.time_step)) invalid("meta.fps", "1 / fps must be an integer multiple of TIME_STEP");
  if (m.width < 16 || m.height < 16) invalid("meta.resolution", "must be at least 16x16 pixels");
  if (spec.engine.dt != m.time_step || spec.engine.seed != m.seed) invalid("engine", "dt and seed must match meta");
  if (spec.logging.sample_period > 0.0 && !is_multiple(spec.logging.sample_period, m.time_step))
    invalid("logging.sample_period", "must be an integer multiple of TIME_STEP");
  if (spec.logging.t_end < spec.logging.t_start) invalid("logging.interval", "end precedes start");

  std::set<SegmentId> segment_ids;
  for (std::size_t i = 0; i < spec.segments.size(); ++i) {
    if (!segment_ids.insert(spec.segments[i].id).second)
      invalid(index("segments", i) + ".id", fmt::format("duplicate segment id {}", spec.segments[i].id.value));
    if (spec.segments[i].id.value < 1) invalid(index("segments", i) + ".id", "must be >= 1");
  }
  auto check_port = [&](const PortRef& p, const std::string& path) {
    if (!segment_ids.count(p.segment)) invalid(path, fmt::format("unknown segment id {}", p.segment.value));
  };
  for (std::size_t i = 0; i < spec.connections.size(); ++i) {
    check_port(spec.connections[i].fixed, index("connections", i) + ".fixed");
    check_port(spec.connections[i].moving, index("connections", i) + ".moving");
  }
  for (std::size_t i = 0; i < spec.auto_connections.size(); ++i) {
    check_port(spec.auto_connections[i].from, index("auto_connections", i) + ".from");
    check_port(spec.auto_connections[i].to, index("auto_connections", i) + ".to");
  }
  if (spec.parking_lot)
    for (std::size_t i = 0; i < spec.parking_lot->exit_points.size(); ++i)
      check_port(spec.parking_lot->exit_points[i], index("parking_lot.exit_points", i));

  std::set<int> vehicle_ids;
  for (std::size_t i = 0; i < spec.vehicles.size(); ++i) {
    const auto& v = spec.vehicles[i];
    if (!vehicle_ids.insert(v.id).second) invalid(index("vehicles", i) + ".id", fmt::format("duplicate vehicle id {}", v.id));
    if (v.placement) {
      if (!segment_ids.count(v.placement->segment))
        invalid(index("vehicles", i) + ".placement.segment", fmt::format("unknown segment id {}", v.placement->segment.value));
    } else if (!spec.parking_lot) {
      invalid(index("vehicles", i) + ".placement", "required when there is no parking lot");
    }
  }
  if (spec.platoon) {
    for (std::size_t i = 0; i < spec.platoon->events.size(); ++i) {
      const auto& e = spec.platoon->events[i];
      const std::string path = index("platoon.events", i);
      if (!vehicle_ids.count(e.vehicle)) invalid(path + ".vehicle", fmt::format("unknown vehicle id {}", e.vehicle));
      if (e.directive)
        if (const auto leader = leader_of(*e.directive); leader && !vehicle_ids.count(leader->value))
          invalid(path, fmt::format("unknown leader id {}", leader->value));
      if (e.t < 0.0) invalid(path + ".t", "must be >= 0");
    }
  }

  // Building everything once surfaces geometric conflicts with the key that caused them.
  build_environment(spec);
}

RoadNetwork build_network(const ScenarioSpec& spec) {
  RoadNetwork net;
  for (std::size_t i = 0; i < spec.segments.size(); ++i) {
    try {
      net.create_road_segment(spec.segments[i].id, spec.segments[i].spec);
    } catch (const SimError& e) {
      invalid(index("segments", i), e.what());
    }
  }
  for (std::size_t i = 0; i < spec.connections.size(); ++i) {
    const auto& c = spec.connections[i];
    try {
      net.connect_road_segments(c.fixed.segment, c.fixed.name, c.moving.segment, c.moving.name);
    } catch (const SimError& e) {
      invalid(index("connections", i), e.what());
    }
  }
  for (std::size_t i = 0; i < spec.auto_connections.size(); ++i) {
    const auto& c = spec.auto_connections[i];
    try {
      net.create_connection(c.from.segment, c.from.name, c.to.segment, c.to.name, c.r_min);
    } catch (const SimError& e) {
      invalid(index("auto_connections", i), e.what());
    }
  }
  return net;
}

std::unique_ptr<TrafficEnvironment> build_environment(const ScenarioSpec& spec) {
  auto env = std::make_unique<TrafficEnvironment>(build_network(spec), spec.engine);
  if (spec.parking_lot) {
    try {
      env->create_virtual_parking_lot(*spec.parking_lot);
    } catch (const SimError& e) {
      invalid("parking_lot", e.what());
    }
  }
  try {
    env->set_log_config(spec.logging);
  } catch (const SimError& e) {
    invalid("logging", e.what());
  }
  for (std::size_t i = 0; i < spec.vehicles.size(); ++i) {
    const auto& v = spec.vehicles[i];
    const std::string path = index("vehicles", i);
    const InputLimits limits = InputLimits::from(v.dynamics);
    ControllerSet controllers;
    if (v.controller.kind == ControllerKind::Zero) {
      controllers.combined = std::make_unique<ZeroController>();
    } else {
      controllers.lateral = std::make_unique<PurePursuitController>(v.controller.pure_pursuit, limits);
      controllers.longitudinal = std::make_unique<AccController>(v.controller.acc, limits, v.controller.comfort_decel);
    }
    try {
      env->create_vehicle(VehicleId{v.id}, std::make_unique<BicycleModel>(v.dynamics), std::move(controllers), v.sensor,
                          std::deque<RoutePrimitive>(v.route.begin(), v.route.end()));
      if (v.placement)
        env->add_vehicle_to_segment(VehicleId{v.id}, v.placement->segment, v.placement->lane, v.placement->offset,
                                    v.placement->speed, v.placement->entry);
    } catch (const SimError& e) {
      invalid(v.placement ? path + ".placement" : path, e.what());
    }
  }
  for (const auto& v : spec.vehicles)
    if (!v.placement) env->admit_to_parking_lot(VehicleId{v.id});
  if (spec.platoon) {
    env->set_platoon_params(spec.platoon->params);
    for (std::size_t i = 0; i < spec.platoon->events.size(); ++i) {
      const auto& e = spec.platoon->events[i];
      try {
        env->schedule_directive(e.t, VehicleId{e.vehicle}, e.directive);
      } catch (const SimError& err) {
        invalid(index("platoon.events", i), err.what());
      }
    }
  }
  return env;
}

ScenarioSpec parse_scenario_text(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SimError(ErrorCode::ParseError,
                   fmt::format("{} (line {}, column {})", e.msg, e.mark.line + 1, e.mark.column + 1));
  }
  if (!doc.IsMap()) throw SimError(ErrorCode::ParseError, "scenario must be a YAML mapping");
  return parse_document(doc);
}

ScenarioSpec parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SimError(ErrorCode::IoError, "cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

std::string serialize_scenario(const ScenarioSpec& spec) {
  using namespace YAML;
  Emitter out;
  out << BeginMap;
  out << Key << "meta" << Value << BeginMap;
  out << Key << "name" << Value << DoubleQuoted << spec.meta.name;
  out << Key << "seed" << Value << spec.meta.seed;
  out << Key << "TIME_STEP" << Value << num(spec.meta.time_step);
  out << Key << "SIMULATION_DURATION" << Value << num(spec.meta.duration);
  out << Key << "SAVE_VIDEO" << Value << spec.meta.save_video;
  out << Key << "fps" << Value << num(spec.meta.fps);
  out << Key << "resolution" << Value << Flow << BeginSeq << spec.meta.width << spec.meta.height << EndSeq;
  out << EndMap;

  const EngineConfig& e = spec.engine;
  out << Key << "engine" << Value << BeginMap;
  out << Key << "vehicle_width" << Value << num(e.vehicle_width);
  out << Key << "vehicle_length" << Value << num(e.vehicle_length);
  out << Key << "min_spawn_gap" << Value << num(e.min_spawn_gap);
  out << Key << "trajectory_spacing" << Value << num(e.trajectory_spacing);
  out << Key << "horizon_segments" << Value << e.horizon_segments;
  out << Key << "lane_change" << Value << Flow << BeginMap << Key << "lead_clear" << Value << num(e.lane_change.lead_clear)
      << Key << "lag_clear" << Value << num(e.lane_change.lag_clear) << EndMap;
  out << EndMap;

  out << Key << "segments" << Value << BeginSeq;
  for (const auto& s : spec.segments) {
    out << Flow << BeginMap;
    out << Key << "id" << Value << s.id.value;
    out << Key << "segment_type" << Value << std::string(to_string(s.spec.type));
    if (s.spec.type == SegmentType::Curved) {
      out << Key << "radius" << Value << num(s.spec.radius);
      out << Key << "sweep_rad" << Value << num(s.spec.sweep);
    } else {
      out << Key << "length" << Value << num(s.spec.length);
    }
    out << Key << "orientation_rad" << Value << num(s.spec.orientation);
    out << Key << "lanes" << Value << s.spec.lanes;
    out << Key << "lane_width" << Value << num(s.spec.lane_width);
    out << Key << "speed_limit" << Value << num(s.spec.speed_limit);
    out << Key << "origin" << Value << Flow << BeginSeq << num(s.spec.origin.x) << num(s.spec.origin.y) << EndSeq;
    out << EndMap;
  }
  out << EndSeq;

  out << Key << "connections" << Value << BeginSeq;
  for (const auto& c : spec.connections) {
    out << Flow << BeginMap << Key << "fixed" << Value;
    emit_port(out, c.fixed);
    out << Key << "moving" << Value;
    emit_port(out, c.moving);
    out << EndMap;
  }
  out << EndSeq;

  out << Key << "auto_connections" << Value << BeginSeq;
  for (const auto& c : spec.auto_connections) {
    out << Flow << BeginMap << Key << "from" << Value;
    emit_port(out, c.from);
    out << Key << "to" << Value;
    emit_port(out, c.to);
    out << Key << "r_min" << Value << num(c.r_min) << EndMap;
  }
  out << EndSeq;

  if (spec.parking_lot) {
    const auto& p = *spec.parking_lot;
    out << Key << "parking_lot" << Value << BeginMap;
    out << Key << "platoon_size" << Value << p.platoon_size;
    out << Key << "time_mean" << Value << num(p.time_mean);
    out << Key << "time_variance" << Value << num(p.time_variance);
    out << Key << "time_sequence_interval" << Value << num(p.time_sequence_interval);
    out << Key << "exit_points" << Value << BeginSeq;
    for (const auto& x : p.exit_points)
      out << Flow << BeginMap << Key << "segment_id" << Value << x.segment.value << Key << "connection_point" << Value
          << x.name << EndMap;
    out << EndSeq << EndMap;
  }

  out << Key << "vehicles" << Value << BeginSeq;
  for (const auto& v : spec.vehicles) {
    out << BeginMap;
    out << Key << "id" << Value << v.id;
    out << Key << "dynamics" << Value << Flow << BeginMap;
    out << Key << "wheelbase" << Value << num(v.dynamics.wheelbase) << Key << "delta_max" << Value << num(v.dynamics.delta_max);
    out << Key << "v_max" << Value << num(v.dynamics.v_max) << Key << "a_min" << Value << num(v.dynamics.a_min);
    out << Key << "a_max" << Value << num(v.dynamics.a_max) << EndMap;
    out << Key << "controller" << Value << BeginMap;
    out << Key << "type" << Value << (v.controller.kind == ControllerKind::Zero ? "zero" : "pure_pursuit_acc");
    out << Key << "pure_pursuit" << Value << Flow << BeginMap << Key << "lookahead_base" << Value
        << num(v.controller.pure_pursuit.lookahead_base) << Key << "lookahead_gain" << Value
        << num(v.controller.pure_pursuit.lookahead_gain) << EndMap;
    out << Key << "acc" << Value;
    emit_acc(out, v.controller.acc);
    out << Key << "comfort_decel" << Value << num(v.controller.comfort_decel);
    out << EndMap;
    out << Key << "sensor" << Value << Flow << BeginMap;
    out << Key << "fov_rad" << Value << num(v.sensor.fov) << Key << "range" << Value << num(v.sensor.range);
    out << Key << "noise_sigma_pos" << Value << num(v.sensor.noise_sigma_pos);
    out << Key << "noise_sigma_vel" << Value << num(v.sensor.noise_sigma_vel) << EndMap;
    out << Key << "route" << Value << Flow << BeginSeq;
    for (auto p : v.route) out << std::string(to_string(p));
    out << EndSeq;
    if (v.placement) {
      const auto& p = *v.placement;
      out << Key << "placement" << Value << Flow << BeginMap;
      out << Key << "segment" << Value << p.segment.value << Key << "lane" << Value << p.lane;
      out << Key << "offset" << Value << num(p.offset) << Key << "speed" << Value << num(p.speed);
      if (!p.entry.empty()) out << Key << "entry" << Value << p.entry;
      out << EndMap;
    }
    out << EndMap;
  }
  out << EndSeq;

  if (spec.platoon) {
    out << Key << "platoon" << Value << BeginMap;
    out << Key << "follow" << Value;
    emit_acc(out, spec.platoon->params.follow);
    out << Key << "merge_ramp_time" << Value << num(spec.platoon->params.merge_ramp_time);
    out << Key << "events" << Value << BeginSeq;
    for (const auto& ev : spec.platoon->events) {
      out << Flow << BeginMap << Key << "t" << Value << num(ev.t) << Key << "vehicle" << Value << ev.vehicle;
      if (!ev.directive) {
        out << Key << "clear" << Value << true;
      } else if (const auto* f = std::get_if<Follow>(&ev.directive->command)) {
        out << Key << "follow" << Value << f->leader.value;
      } else if (const auto* m = std::get_if<Merge>(&ev.directive->command)) {
        out << Key << "merge" << Value << m->leader.value;
      } else if (const auto* s = std::get_if<Split>(&ev.directive->command)) {
        out << Key << "split" << Value << num(s->gap_target);
      }
      out << EndMap;
    }
    out << EndSeq << EndMap;
  }

  out << Key << "logging" << Value << BeginMap;
  out << Key << "channels" << Value << Flow << BeginSeq;
  for (auto c : spec.logging.channels) out << std::string(to_string(c));
  out << EndSeq;
  out << Key << "interval" << Value << Flow << BeginSeq << num(spec.logging.t_start) << num(spec.logging.t_end) << EndSeq;
  out << Key << "sample_period" << Value << num(spec.logging.sample_period);
  out << EndMap;

  out << EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace platoonsim
