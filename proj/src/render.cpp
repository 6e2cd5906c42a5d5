#include "platoonsim/render.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "platoonsim/error.hpp"

namespace platoonsim {

namespace {

constexpr double kMarginFraction = 0.05;
constexpr int kShift = 4;  // sub-pixel bits for OpenCV drawing
constexpr double kSubpixel = 1 << kShift;
constexpr double kPolylineSpacing = 1.0;

cv::Scalar bgr(Rgb c) { return {double(c.b), double(c.g), double(c.r)}; }

cv::Point pt(const Viewport& vp, const Vec2& world) {
  const Vec2 p = vp.to_pixel(world);
  return {static_cast<int>(std::lround(p.x * kSubpixel)), static_cast<int>(std::lround(p.y * kSubpixel))};
}

std::vector<cv::Point> pts(const Viewport& vp, const std::vector<Vec2>& world) {
  std::vector<cv::Point> out;
  out.reserve(world.size());
  for (const auto& p : world) out.push_back(pt(vp, p));
  return out;
}

// Points of `path` shifted `offset` meters to the left of travel.
Polyline offset_polyline(const Path& path, double offset) {
  Polyline out;
  for (const Pose2D& pose : path.sample(kPolylineSpacing))
    out.push_back(pose.position() + offset * unit_vector(pose.theta() + kPi / 2.0));
  return out;
}

Polygon rectangle(const Vec2& center, double heading, double half_length, double half_width) {
  const Vec2 f = half_length * unit_vector(heading);
  const Vec2 l = half_width * unit_vector(heading + kPi / 2.0);
  return {center + f + l, center - f + l, center - f - l, center + f - l};
}

Viewport fit(const Bounds& b, int width, int height) {
  Viewport vp;
  vp.width = width;
  vp.height = height;
  if (b.empty) return vp;
  vp.center = 0.5 * (b.min + b.max);
  const double bw = (b.max.x - b.min.x) * (1.0 + 2.0 * kMarginFraction);
  const double bh = (b.max.y - b.min.y) * (1.0 + 2.0 * kMarginFraction);
  double scale = std::numeric_limits<double>::infinity();
  if (bw > 0.0) scale = std::min(scale, width / bw);
  if (bh > 0.0) scale = std::min(scale, height / bh);
  vp.scale = std::isfinite(scale) ? scale : 1.0;
  return vp;
}

cv::Mat to_mat(const Image& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.rgb.data()));
  cv::Mat out;
  cv::cvtColor(rgb, out, cv::COLOR_RGB2BGR);
  return out;
}

Image from_mat(const cv::Mat& bgr_mat) {
  cv::Mat rgb;
  cv::cvtColor(bgr_mat, rgb, cv::COLOR_BGR2RGB);
  Image image;
  image.width = rgb.cols;
  image.height = rgb.rows;
  image.rgb.assign(rgb.data, rgb.data + rgb.total() * 3);
  return image;
}

void draw_roads(cv::Mat& canvas, const Viewport& vp, const RoadLayer& layer) {
  for (const auto& poly : layer.roads) {
    const std::vector<std::vector<cv::Point>> contour{pts(vp, poly)};
    cv::fillPoly(canvas, contour, bgr(palette::kRoad), cv::LINE_8, kShift);
  }
  for (const auto& line : layer.lane_boundaries)
    cv::polylines(canvas, pts(vp, line), false, bgr(palette::kLaneBoundary), 1, cv::LINE_8, kShift);
  for (const auto& line : layer.lane_centers)
    cv::polylines(canvas, pts(vp, line), false, bgr(palette::kLaneCenter), 1, cv::LINE_8, kShift);
}

}  // namespace

Image::Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = fill.r;
    rgb[i + 1] = fill.g;
    rgb[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void write_png(const std::filesystem::path& path, const Image& image) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), to_mat(image));
  } catch (const cv::Exception& e) {
    throw SimError(ErrorCode::IoError, "cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw SimError(ErrorCode::IoError, "cannot write " + path.string());
}

Image read_png(const std::filesystem::path& path) {
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw SimError(ErrorCode::IoError, "cannot decode " + path.string());
  return from_mat(m);
}

Vec2 Viewport::to_pixel(const Vec2& world) const noexcept {
  return {width / 2.0 + (world.x - center.x) * scale, height / 2.0 - (world.y - center.y) * scale};
}

void Bounds::add(const Vec2& p) noexcept {
  if (empty) {
    min = max = p;
    empty = false;
    return;
  }
  min = {std::min(min.x, p.x), std::min(min.y, p.y)};
  max = {std::max(max.x, p.x), std::max(max.y, p.y)};
}

std::vector<Polygon> road_polygons(const RoadSegment& segment) {
  const SegmentSpec& s = segment.spec();
  const double half = s.lanes * s.lane_width / 2.0;
  if (s.type == SegmentType::Intersection) {
    std::vector<Polygon> out{rectangle(s.origin, s.orientation, half, half)};
    if (s.length > 0.0) {
      for (const auto& name : segment.port_names()) {
        const Pose2D port = segment.port(name).pose;
        const Vec2 mid = port.position() - (s.length / 2.0) * port.heading_vector();
        out.push_back(rectangle(mid, port.theta(), s.length / 2.0, half));
      }
    }
    return out;
  }
  const Path axis = segment.axis_path();
  Polygon poly = offset_polyline(axis, half);
  Polygon right = offset_polyline(axis, -half);
  poly.insert(poly.end(), right.rbegin(), right.rend());
  return {poly};
}

Bounds road_bounds(const RoadNetwork& network) {
  Bounds b;
  for (const auto& [id, seg] : network.segments())
    for (const auto& poly : road_polygons(seg))
      for (const auto& p : poly) b.add(p);
  return b;
}

Viewport fit_viewport(const RoadNetwork& network, int width, int height) {
  return fit(road_bounds(network), width, height);
}

RoadLayer build_road_layer(const RoadNetwork& network) {
  RoadLayer layer;
  for (const auto& [id, seg] : network.segments()) {
    auto polys = road_polygons(seg);
    layer.roads.insert(layer.roads.end(), polys.begin(), polys.end());
    const SegmentSpec& s = seg.spec();
    if (s.type == SegmentType::Intersection) {
      for (int lane = 1; lane <= s.lanes; ++lane) {
        layer.lane_centers.push_back(offset_polyline(seg.route_path("west", "east", lane), 0.0));
        layer.lane_centers.push_back(offset_polyline(seg.route_path("south", "north", lane), 0.0));
      }
      continue;
    }
    const Path axis = seg.axis_path();
    for (int k = 1; k < s.lanes; ++k) layer.lane_boundaries.push_back(offset_polyline(axis, k * s.lane_width - s.lanes * s.lane_width / 2.0));
    for (int lane = 1; lane <= s.lanes; ++lane)
      layer.lane_centers.push_back(offset_polyline(axis, lane_offset(lane, s.lanes, s.lane_width)));
  }
  return layer;
}

Frame make_frame(std::uint64_t index, const Viewport& viewport, const RoadLayer& roads, const TrafficEnvironment& env) {
  Frame f;
  f.index = index;
  f.viewport = viewport;
  f.roads = roads.roads;
  f.lane_boundaries = roads.lane_boundaries;
  f.lane_centers = roads.lane_centers;
  const EngineConfig& cfg = env.config();
  for (const Vehicle* v : env.vehicles()) {
    if (v->status == VehicleStatus::Parked) continue;
    if (v->status == VehicleStatus::Active && !v->reference.empty()) {
      Polyline ref;
      ref.reserve(v->reference.size());
      for (const auto& p : v->reference.points) ref.push_back(p.position);
      f.references.push_back(std::move(ref));
    }
    const Polygon body = rectangle(v->state.position(), v->state.theta, cfg.vehicle_length / 2.0, cfg.vehicle_width / 2.0);
    f.vehicles.push_back({v->id, {body[0], body[1], body[2], body[3]}, v->status});
  }
  return f;
}

Image rasterize(const Frame& frame) {
  const Viewport& vp = frame.viewport;
  cv::Mat canvas(vp.height, vp.width, CV_8UC3, bgr(palette::kBackground));
  draw_roads(canvas, vp, {frame.roads, frame.lane_boundaries, frame.lane_centers});
  for (const auto& line : frame.references)
    cv::polylines(canvas, pts(vp, line), false, bgr(palette::kReference), 2, cv::LINE_8, kShift);
  for (const auto& g : frame.vehicles) {
    const auto corners = pts(vp, std::vector<Vec2>(g.corners.begin(), g.corners.end()));
    const Rgb color = g.status == VehicleStatus::Crashed ? palette::kCrashed : palette::kActive;
    cv::fillConvexPoly(canvas, corners, bgr(color), cv::LINE_8, kShift);
  }
  return from_mat(canvas);
}

GraphLayout graph_layout(const RoadNetwork& network) {
  const NetworkGraph g = network.as_graph();
  GraphLayout layout;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) layout.nodes.push_back({g.nodes[i].position, std::to_string(i)});
  for (const auto& e : g.edges) layout.edges.push_back({e.from, e.to, std::to_string(e.segment.value)});
  return layout;
}

Image visualize_road_network(const RoadNetwork& network, int width, int height) {
  const int panel = width / 2;
  cv::Mat canvas(height, width, CV_8UC3, bgr(palette::kBackground));

  cv::Mat left = canvas(cv::Rect(0, 0, panel, height));
  draw_roads(left, fit_viewport(network, panel, height), build_road_layer(network));

  const GraphLayout layout = graph_layout(network);
  Bounds nb;
  for (const auto& n : layout.nodes) nb.add(n.position);
  Viewport vp = fit(nb, width - panel, height);
  if (!nb.empty && nb.max.x == nb.min.x && nb.max.y == nb.min.y) vp.scale = 1.0;
  // Keep node disks off the panel border.
  vp.scale *= 0.85;
  cv::Mat right = canvas(cv::Rect(panel, 0, width - panel, height));
  if (!network.empty()) cv::line(canvas, {panel, 0}, {panel, height - 1}, bgr(palette::kRoad), 1, cv::LINE_8);

  auto to_cv = [&](const Vec2& w) {
    const Vec2 p = vp.to_pixel(w);
    return cv::Point2d(p.x, p.y);
  };
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  for (const auto& e : layout.edges) {
    cv::Point2d a = to_cv(layout.nodes[e.from].position);
    cv::Point2d b = to_cv(layout.nodes[e.to].position);
    cv::Point2d d = b - a;
    const double len = std::hypot(d.x, d.y);
    if (len < 1.0) {
      cv::circle(right, a + cv::Point2d(0, -18), 14, bgr(palette::kGraphEdge), 1, cv::LINE_8);
      cv::putText(right, e.label, a + cv::Point2d(-6, -36), font, 0.45, bgr(palette::kGraphEdge), 1, cv::LINE_8);
      continue;
    }
    // Opposite directions of the same segment are drawn side by side.
    const cv::Point2d n(-d.y / len * 6.0, d.x / len * 6.0);
    const cv::Point2d u = d * (1.0 / len);
    const cv::Point2d from = a + n + u * 10.0;
    const cv::Point2d to = b + n - u * 10.0;
    cv::arrowedLine(right, from, to, bgr(palette::kGraphEdge), 1, cv::LINE_8, 0, std::min(0.3, 12.0 / len));
    const cv::Point2d mid = 0.5 * (from + to) + n * 1.5;
    cv::putText(right, e.label, mid, font, 0.45, bgr(palette::kGraphEdge), 1, cv::LINE_8);
  }
  for (const auto& node : layout.nodes) {
    const cv::Point2d c = to_cv(node.position);
    cv::circle(right, c, 8, bgr(palette::kGraphNode), cv::FILLED, cv::LINE_8);
    cv::putText(right, node.label, c + cv::Point2d(10, -10), font, 0.5, bgr(palette::kGraphNode), 1, cv::LINE_8);
  }
  return from_mat(canvas);
}

}  // namespace platoonsim
