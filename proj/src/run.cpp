#include "platoonsim/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "platoonsim/error.hpp"
#include "platoonsim/render.hpp"

namespace platoonsim {

namespace {

// Times are multiples of dt; snapping to a nanosecond grid keeps the printed
// value free of accumulated binary noise.
double snap_time(double t) { return std::round(t * 1e9) / 1e9; }

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw SimError(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

ScenarioSpec apply_overrides(ScenarioSpec spec, const RunOverrides& o) {
  if (o.seed) spec.meta.seed = spec.engine.seed = *o.seed;
  if (o.dt) spec.meta.time_step = spec.engine.dt = *o.dt;
  if (o.duration) spec.meta.duration = *o.duration;
  if (o.frames) spec.meta.save_video = *o.frames;
  validate_scenario(spec);
  return spec;
}

std::string csv_line(const LogRecord& r) {
  std::string line = fmt::format("{},{},{}", snap_time(r.t), r.vehicle.value, to_string(r.channel));
  for (std::size_t i = 0; i < 4; ++i) {
    line += ',';
    if (i < r.values.size()) line += fmt::format("{}", r.values[i]);
  }
  return line;
}

std::string summary_json(const RunSummary& s, bool with_wall_time) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["dt"] = s.dt;
  j["duration"] = s.duration;
  j["steps"] = s.steps;
  j["frames_written"] = s.frames_written;
  j["crash_count"] = s.crash_count;
  nlohmann::ordered_json status = nlohmann::ordered_json::object();
  for (const auto& [id, st] : s.final_status) status[std::to_string(id)] = st;
  j["final_status"] = status;
  j["counts"] = {{"active", s.active}, {"crashed", s.crashed}, {"parked", s.parked}};
  j["route_faults"] = s.route_faults;
  j["log_records"] = s.log_records;
  j["releases"] = s.releases;
  if (with_wall_time) j["wall_time_s"] = s.wall_time_s;
  return j.dump(2) + "\n";
}

RunSummary run(const ScenarioSpec& spec, const std::filesystem::path& out_dir) {
  const auto started = std::chrono::steady_clock::now();
  auto env = build_environment(spec);

  ensure_dir(out_dir);
  const auto log_path = out_dir / "log.csv";
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw SimError(ErrorCode::IoError, "cannot open " + log_path.string());
  log << kCsvHeader << '\n';

  RunSummary summary;
  summary.name = spec.meta.name;
  summary.seed = spec.meta.seed;
  summary.dt = spec.meta.time_step;
  summary.duration = spec.meta.duration;
  summary.steps = step_count(spec.meta);

  const std::uint64_t stride = frame_stride(spec.meta);
  const auto frame_dir = out_dir / "frames";
  std::optional<Viewport> viewport;
  RoadLayer roads;
  if (spec.meta.save_video) {
    ensure_dir(frame_dir);
    viewport = fit_viewport(env->network(), spec.meta.width, spec.meta.height);
    roads = build_road_layer(env->network());
  }
  auto emit_frame = [&](std::uint64_t step) {
    if (!viewport || step % stride != 0 || step >= summary.steps) return;
    const Image image = rasterize(make_frame(summary.frames_written, *viewport, roads, *env));
    write_png(frame_dir / fmt::format("frame_{:06d}.png", summary.frames_written), image);
    ++summary.frames_written;
  };

  emit_frame(0);
  for (std::uint64_t i = 0; i < summary.steps; ++i) {
    const StepReport report = env->step();
    for (const auto& r : report.records) log << csv_line(r) << '\n';
    summary.log_records += report.records.size();
    summary.route_faults += report.route_faults;
    summary.releases += report.releases.size();
    for (const auto& tr : report.transitions)
      if (tr.to == VehicleStatus::Crashed) ++summary.crash_count;
    emit_frame(env->step_index());
  }
  log.flush();
  if (!log) throw SimError(ErrorCode::IoError, "failed writing " + log_path.string());

  for (const Vehicle* v : env->vehicles()) summary.final_status[v->id.value] = std::string(to_string(v->status));
  summary.active = env->count(VehicleStatus::Active);
  summary.crashed = env->count(VehicleStatus::Crashed);
  summary.parked = env->count(VehicleStatus::Parked);
  summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const auto summary_path = out_dir / "summary.json";
  std::ofstream out(summary_path, std::ios::binary);
  out << summary_json(summary);
  if (!out) throw SimError(ErrorCode::IoError, "failed writing " + summary_path.string());
  return summary;
}

}  // namespace platoonsim
