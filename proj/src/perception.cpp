#include "platoonsim/perception.hpp"

#include <algorithm>

#include "platoonsim/error.hpp"

namespace platoonsim {

void validate(const SensorConfig& cfg) {
  if (!(cfg.fov > 0.0 && cfg.fov <= kTwoPi))
    throw SimError(ErrorCode::InvalidArgument, "fov must lie in (0, 2*pi]");
  if (!(cfg.range > 0.0)) throw SimError(ErrorCode::InvalidArgument, "range must be > 0");
  if (!(cfg.noise_sigma_pos >= 0.0) || !(cfg.noise_sigma_vel >= 0.0))
    throw SimError(ErrorCode::InvalidArgument, "noise sigmas must be >= 0");
}

namespace {

void sort_neighbors(std::vector<NeighborMeasurement>& neighbors) {
  std::sort(neighbors.begin(), neighbors.end(), [](const auto& a, const auto& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.vehicle_id < b.vehicle_id;
  });
}

}  // namespace

PerceptionData sense(const EgoView& ego, const std::vector<OtherVehicle>& others,
                     const SensorConfig& cfg, double timestamp) {
  PerceptionData out;
  out.ego_id = ego.id;
  out.timestamp = timestamp;
  const Pose2D pose = ego.state.pose();
  const Vec2 ego_velocity = ego.state.v * unit_vector(ego.state.theta);
  for (const auto& other : others) {
    if (other.id == ego.id) continue;
    const Vec2 rel = to_body_frame(pose, other.state.position());
    const double dist = rel.norm();
    if (dist > cfg.range) continue;
    if (std::abs(std::atan2(rel.y, rel.x)) > cfg.fov / 2.0) continue;
    const Vec2 other_velocity = other.state.v * unit_vector(other.state.theta);
    out.neighbors.push_back(
        {other.id, rel, rotate(other_velocity - ego_velocity, -pose.theta()), dist, other.lane});
  }
  sort_neighbors(out.neighbors);
  return out;
}

PerceptionData add_noise(PerceptionData data, NoiseEngine& rng, const SensorConfig& cfg) {
  const bool pos_noise = cfg.noise_sigma_pos > 0.0;
  const bool vel_noise = cfg.noise_sigma_vel > 0.0;
  if (!pos_noise && !vel_noise) return data;
  std::normal_distribution<double> pos(0.0, pos_noise ? cfg.noise_sigma_pos : 1.0);
  std::normal_distribution<double> vel(0.0, vel_noise ? cfg.noise_sigma_vel : 1.0);
  for (auto& n : data.neighbors) {
    if (pos_noise) {
      n.rel_position.x += pos(rng);
      n.rel_position.y += pos(rng);
      n.distance = n.rel_position.norm();
    }
    if (vel_noise) {
      n.rel_velocity.x += vel(rng);
      n.rel_velocity.y += vel(rng);
    }
  }
  sort_neighbors(data.neighbors);
  return data;
}

}  // namespace platoonsim
