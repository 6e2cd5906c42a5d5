#include "platoonsim/trajectory.hpp"

namespace platoonsim {

void Trajectory::append(const Trajectory& other, double duplicate_tolerance) {
  if (other.points.empty()) return;
  std::size_t first = 0;
  double shift = 0.0;
  if (!points.empty()) {
    const TrajectoryPoint& last = points.back();
    if (distance(last.position, other.points.front().position) <= duplicate_tolerance) first = 1;
    shift = last.arc_length - other.points.front().arc_length;
    if (first == 0) shift += distance(last.position, other.points.front().position);
  }
  for (std::size_t i = first; i < other.points.size(); ++i) {
    TrajectoryPoint p = other.points[i];
    p.arc_length += shift;
    points.push_back(p);
  }
  dead_end = dead_end || other.dead_end;
}

}  // namespace platoonsim
