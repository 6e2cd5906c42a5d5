#pragma once

#include <vector>

#include "platoonsim/geometry.hpp"

namespace platoonsim {

struct TrajectoryPoint {
  Vec2 position;
  double heading = 0.0;
  double speed_ref = 0.0;
  double arc_length = 0.0;
};

/// Global-frame polyline with a speed reference per point. Arc length is
/// strictly increasing along `points`.
struct Trajectory {
  std::vector<TrajectoryPoint> points;
  /// Set when the route ran into an open end before the requested horizon.
  bool dead_end = false;

  bool empty() const noexcept { return points.empty(); }
  std::size_t size() const noexcept { return points.size(); }
  double length() const noexcept { return points.empty() ? 0.0 : points.back().arc_length; }

  /// Appends `other`, shifting its arc length so it continues from the current
  /// end. A leading point that coincides with the current last point is dropped.
  void append(const Trajectory& other, double duplicate_tolerance = 1e-6);
};

}  // namespace platoonsim
