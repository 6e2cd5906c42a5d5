#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "platoonsim/engine.hpp"
#include "platoonsim/geometry.hpp"
#include "platoonsim/road_network.hpp"

namespace platoonsim {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

namespace palette {
inline constexpr Rgb kBackground{230, 230, 230};
inline constexpr Rgb kRoad{64, 64, 64};
inline constexpr Rgb kLaneBoundary{200, 200, 200};
inline constexpr Rgb kLaneCenter{40, 90, 220};
inline constexpr Rgb kReference{220, 30, 30};
inline constexpr Rgb kActive{30, 170, 60};
inline constexpr Rgb kCrashed{150, 0, 30};
inline constexpr Rgb kGraphNode{20, 20, 20};
inline constexpr Rgb kGraphEdge{90, 90, 160};
}  // namespace palette

/// Packed 8-bit RGB raster, row-major, origin at the top-left.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, Rgb fill);
  Rgb at(int x, int y) const;
  friend bool operator==(const Image&, const Image&) = default;
};

/// Throws IoError if the file cannot be written or read.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// World-to-pixel mapping, y axis pointing up on screen.
struct Viewport {
  Vec2 center;
  double scale = 1.0;  ///< pixels per meter
  int width = 1280;
  int height = 720;

  Vec2 to_pixel(const Vec2& world) const noexcept;
};

struct Bounds {
  Vec2 min;
  Vec2 max;
  bool empty = true;

  void add(const Vec2& p) noexcept;
};

using Polygon = std::vector<Vec2>;
using Polyline = std::vector<Vec2>;

/// Filled road surface of a segment; intersections yield the core plus one
/// rectangle per arm.
std::vector<Polygon> road_polygons(const RoadSegment& segment);
Bounds road_bounds(const RoadNetwork& network);

/// Fits the network's drawn extent plus 5% on every side.
Viewport fit_viewport(const RoadNetwork& network, int width, int height);

struct VehicleGlyph {
  VehicleId id;
  std::array<Vec2, 4> corners;
  VehicleStatus status = VehicleStatus::Active;
};

struct Frame {
  std::uint64_t index = 0;
  Viewport viewport;
  std::vector<Polygon> roads;
  std::vector<Polyline> lane_boundaries;
  std::vector<Polyline> lane_centers;
  std::vector<Polyline> references;
  std::vector<VehicleGlyph> vehicles;  ///< parked vehicles are not drawn
};

/// Static road layer, shared by every frame of a run.
struct RoadLayer {
  std::vector<Polygon> roads;
  std::vector<Polyline> lane_boundaries;
  std::vector<Polyline> lane_centers;
};
RoadLayer build_road_layer(const RoadNetwork& network);

Frame make_frame(std::uint64_t index, const Viewport& viewport, const RoadLayer& roads,
                 const TrafficEnvironment& env);
Image rasterize(const Frame& frame);

struct GraphLayout {
  struct Node {
    Vec2 position;
    std::string label;
  };
  struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    std::string label;  ///< segment id
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
};
GraphLayout graph_layout(const RoadNetwork& network);

/// Geometric road plot on the left, node/edge graph on the right.
Image visualize_road_network(const RoadNetwork& network, int width = 1600, int height = 800);

}  // namespace platoonsim
