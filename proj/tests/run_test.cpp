#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "platoonsim/error.hpp"
#include "platoonsim/render.hpp"
#include "platoonsim/run.hpp"

using namespace platoonsim;

namespace {

const char* kScenario = R"(
meta:
  name: short
  seed: 5
  TIME_STEP: 0.05
  SIMULATION_DURATION: 10
  SAVE_VIDEO: false
  fps: 10
  resolution: [320, 180]
segments:
  - {id: 1, segment_type: straight, length: 300, orientation_deg: 0, lanes: 2, lane_width: 4, speed_limit: 10}
vehicle_defaults:
  sensor: {noise_sigma_pos: 0.1, noise_sigma_vel: 0.1}
vehicles:
  - {id: 1, placement: {segment: 1, lane: 1, offset: 40, speed: 8}}
  - {id: 2, placement: {segment: 1, lane: 1, offset: 30, speed: 8}}
)";

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("platoonsim_run_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Csv, LineFormat) {
  EXPECT_EQ(csv_line({0.1 + 0.2, VehicleId{3}, LogChannel::Velocity, {2.5}}), "0.3,3,velocity,2.5,,,");
  EXPECT_EQ(csv_line({1.0, VehicleId{1}, LogChannel::Position, {1.0, -2.0, 0.25}}), "1,1,position,1,-2,0.25,");
  EXPECT_EQ(csv_line({2.0, VehicleId{1}, LogChannel::ControlInput, {0.1, 0.2, 0.3, 0.4}}),
            "2,1,control_input,0.1,0.2,0.3,0.4");
}

TEST(Run, StepsLogAndSummary) {
  const ScenarioSpec spec = parse_scenario_text(kScenario);
  const auto dir = fresh_dir("basic");
  const RunSummary s = run(spec, dir);
  EXPECT_EQ(s.steps, 200u);
  EXPECT_EQ(s.frames_written, 0u);
  EXPECT_EQ(s.crash_count, 0u);
  EXPECT_EQ(s.active, 2u);
  EXPECT_EQ(s.final_status.at(1), "active");
  EXPECT_FALSE(std::filesystem::exists(dir / "frames"));

  const auto log = lines(slurp(dir / "log.csv"));
  ASSERT_FALSE(log.empty());
  EXPECT_EQ(log[0], kCsvHeader);
  // Every channel of both vehicles at t = 0 and after each of the 200 steps.
  EXPECT_EQ(log.size() - 1, 201u * 2 * 4);
  EXPECT_EQ(s.log_records, log.size() - 1);
  EXPECT_EQ(log.back().substr(0, 3), "10,");

  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j["steps"], 200);
  EXPECT_EQ(j["name"], "short");
  EXPECT_EQ(j["counts"]["active"], 2);
  EXPECT_TRUE(j.contains("wall_time_s"));
}

TEST(Run, SameSeedSameBytes) {
  const ScenarioSpec spec = parse_scenario_text(kScenario);
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  const RunSummary sa = run(spec, a);
  const RunSummary sb = run(spec, b);
  EXPECT_EQ(slurp(a / "log.csv"), slurp(b / "log.csv"));
  EXPECT_EQ(summary_json(sa, false), summary_json(sb, false));

  // A different seed changes the noisy measurements and hence the log.
  const auto c = fresh_dir("det_c");
  run(apply_overrides(spec, {.seed = 6}), c);
  EXPECT_NE(slurp(a / "log.csv"), slurp(c / "log.csv"));
}

TEST(Run, FramesAtConfiguredRate) {
  RunOverrides o;
  o.frames = true;
  o.duration = 2.0;
  const ScenarioSpec spec = apply_overrides(parse_scenario_text(kScenario), o);
  const auto dir = fresh_dir("frames");
  const RunSummary s = run(spec, dir);
  EXPECT_EQ(s.steps, 40u);
  EXPECT_EQ(s.frames_written, 20u);
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(dir / "frames")) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  ASSERT_EQ(names.size(), 20u);
  EXPECT_EQ(names.front(), "frame_000000.png");
  EXPECT_EQ(names.back(), "frame_000019.png");
  const Image img = read_png(dir / "frames" / "frame_000007.png");
  EXPECT_EQ(img.width, 320);
  EXPECT_EQ(img.height, 180);
}

TEST(Run, OverridesAreRevalidated) {
  const ScenarioSpec spec = parse_scenario_text(kScenario);
  const ScenarioSpec shorter = apply_overrides(spec, {.duration = 1.0, .dt = 0.1});
  EXPECT_EQ(step_count(shorter.meta), 10u);
  EXPECT_EQ(shorter.engine.dt, 0.1);
  try {
    apply_overrides(spec, {.dt = 0.3});  // 10 s is not a multiple of 0.3 s
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  }
}

TEST(Run, UnwritableOutputIsIoError) {
  const auto file = fresh_dir("blocker");
  std::ofstream(file) << "not a directory";
  try {
    run(parse_scenario_text(kScenario), file / "out");
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
  std::filesystem::remove(file);
}
