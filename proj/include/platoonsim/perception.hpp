#pragma once

#include <optional>
#include <random>
#include <vector>

#include "platoonsim/dynamics.hpp"
#include "platoonsim/geometry.hpp"

namespace platoonsim {

struct VehicleId {
  int value = 0;
  auto operator<=>(const VehicleId&) const = default;
};

struct SensorConfig {
  double fov = kPi;  ///< full cone angle centered on the heading
  double range = 100.0;
  double noise_sigma_pos = 0.0;
  double noise_sigma_vel = 0.0;

  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

/// Throws SimError(InvalidArgument) on a bad configuration.
void validate(const SensorConfig& cfg);

struct NeighborMeasurement {
  VehicleId vehicle_id;
  Vec2 rel_position;  ///< body frame of the observer
  Vec2 rel_velocity;  ///< body frame of the observer
  double distance = 0.0;
  std::optional<int> lane;

  friend bool operator==(const NeighborMeasurement&, const NeighborMeasurement&) = default;
};

struct PerceptionData {
  VehicleId ego_id;
  double timestamp = 0.0;
  std::vector<NeighborMeasurement> neighbors;  ///< ascending distance, then id

  friend bool operator==(const PerceptionData&, const PerceptionData&) = default;
};

struct EgoView {
  VehicleId id;
  VehicleState state;
};

struct OtherVehicle {
  VehicleId id;
  VehicleState state;
  std::optional<int> lane;
};

/// Noiseless detection of every other vehicle inside range and the field of view.
PerceptionData sense(const EgoView& ego, const std::vector<OtherVehicle>& others,
                     const SensorConfig& cfg, double timestamp = 0.0);

using NoiseEngine = std::mt19937_64;

/// Adds i.i.d. zero-mean Gaussian noise to relative position and velocity.
/// Distance is recomputed from the noisy position; zero sigmas leave data unchanged.
PerceptionData add_noise(PerceptionData data, NoiseEngine& rng, const SensorConfig& cfg);

}  // namespace platoonsim
