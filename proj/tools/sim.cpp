// Command-line front end: run, graph, validate.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "platoonsim/error.hpp"
#include "platoonsim/render.hpp"
#include "platoonsim/run.hpp"
#include "platoonsim/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kIo = 2;

int exit_code(const platoonsim::SimError& e) {
  using platoonsim::ErrorCode;
  switch (e.code()) {
    case ErrorCode::IoError: return kIo;
    default: return kValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace platoonsim;
  CLI::App app{"Headless 2D platooning simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  RunOverrides overrides;
  bool frames = false;

  auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write log.csv, summary.json and frames");
  run_cmd->add_option("scenario", scenario, "scenario YAML file")->required();
  run_cmd->add_option("--out", out, "output directory")->required();
  run_cmd->add_option("--seed", overrides.seed, "random seed");
  run_cmd->add_option("--duration", overrides.duration, "simulated seconds");
  run_cmd->add_option("--dt", overrides.dt, "time step in seconds");
  auto* frames_flag = run_cmd->add_flag("--frames,!--no-frames", frames, "write (or suppress) PNG frames");

  auto* graph_cmd = app.add_subcommand("graph", "draw the road network and its graph");
  graph_cmd->add_option("scenario", scenario, "scenario YAML file")->required();
  graph_cmd->add_option("--out", out, "output PNG file")->required();

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
  validate_cmd->add_option("scenario", scenario, "scenario YAML file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (*validate_cmd) {
      const ScenarioSpec spec = parse_scenario(scenario);
      std::cout << spec.meta.name << ": ok (" << spec.segments.size() << " segments, " << spec.vehicles.size()
                << " vehicles)\n";
      return kOk;
    }
    if (*graph_cmd) {
      const ScenarioSpec spec = parse_scenario(scenario);
      write_png(out, visualize_road_network(build_network(spec)));
      std::cout << "wrote " << out << "\n";
      return kOk;
    }
    if (frames_flag->count() > 0) overrides.frames = frames;
    const ScenarioSpec spec = apply_overrides(parse_scenario(scenario), overrides);
    const RunSummary summary = run(spec, out);
    std::cout << summary_json(summary);
    if (summary.frames_written > 0) {
      std::cout << "encode with: ffmpeg -framerate " << spec.meta.fps << " -i " << out
                << "/frames/frame_%06d.png -c:v libx264 -pix_fmt yuv420p " << out << "/video.mp4\n";
    }
    return kOk;
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}
