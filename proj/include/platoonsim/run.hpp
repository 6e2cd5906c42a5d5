#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "platoonsim/scenario.hpp"

namespace platoonsim {

/// Command-line overrides of scenario values.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<double> dt;
  std::optional<bool> frames;
};

/// Returns `spec` with the overrides applied, revalidated.
ScenarioSpec apply_overrides(ScenarioSpec spec, const RunOverrides& overrides);

struct RunSummary {
  std::string name;
  std::uint64_t seed = 0;
  double dt = 0.0;
  double duration = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t frames_written = 0;
  std::size_t crash_count = 0;
  std::map<int, std::string> final_status;
  std::size_t active = 0;
  std::size_t crashed = 0;
  std::size_t parked = 0;
  std::size_t route_faults = 0;
  std::size_t log_records = 0;
  std::size_t releases = 0;
  double wall_time_s = 0.0;
};

/// Formats one log record as a `log.csv` line (without newline).
std::string csv_line(const LogRecord& record);
inline constexpr const char* kCsvHeader = "t,vehicle_id,channel,v1,v2,v3,v4";

/// JSON text of the summary; `with_wall_time = false` drops the only
/// non-deterministic field.
std::string summary_json(const RunSummary& summary, bool with_wall_time = true);

/// Simulates the scenario, writing log.csv, summary.json and, when
/// SAVE_VIDEO is set, frames/frame_%06d.png under `out_dir`. Throws IoError
/// when an output cannot be written.
RunSummary run(const ScenarioSpec& spec, const std::filesystem::path& out_dir);

}  // namespace platoonsim
