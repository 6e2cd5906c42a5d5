#pragma once

#include <memory>

#include "platoonsim/geometry.hpp"

namespace platoonsim {

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;

  Pose2D pose() const noexcept { return {x, y, theta}; }
  Vec2 position() const noexcept { return {x, y}; }
  bool finite() const noexcept;
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Time derivative of a VehicleState, component by component.
struct StateDerivative {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;

  friend bool operator==(const StateDerivative&, const StateDerivative&) = default;
};

struct ControlInput {
  double a = 0.0;      ///< longitudinal acceleration [m/s^2]
  double delta = 0.0;  ///< front steering angle [rad]

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct BicycleParams {
  double wheelbase = 2.5;
  double delta_max = 0.6;
  double v_max = 30.0;
  double a_min = -6.0;
  double a_max = 3.0;

  friend bool operator==(const BicycleParams&, const BicycleParams&) = default;
};

/// Throws SimError(InvalidArgument) if the parameter invariants do not hold.
void validate(const BicycleParams& params);

/// Continuous-time vehicle model x' = f(x, u, t). Implementations must be
/// deterministic and free of side effects.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual StateDerivative derivative(const VehicleState& state, const ControlInput& input,
                                     double t) const = 0;
  /// Clamps an input to the admissible set.
  virtual ControlInput saturate(const ControlInput& input) const { return input; }
  /// Projects a state back onto the admissible set after an integration step.
  virtual VehicleState project(const VehicleState& state) const { return state; }
  virtual std::unique_ptr<DynamicsModel> clone() const = 0;
};

ControlInput saturate(const ControlInput& input, const BicycleParams& params) noexcept;

/// Rear-axle kinematic bicycle: x' = v cos(theta), y' = v sin(theta),
/// theta' = v tan(delta) / L, v' = a. Inputs are saturated first; a vehicle at
/// standstill does not roll backwards under braking.
StateDerivative bicycle_derivative(const VehicleState& state, const ControlInput& input, double t,
                                   const BicycleParams& params) noexcept;

class BicycleModel final : public DynamicsModel {
 public:
  explicit BicycleModel(BicycleParams params);

  const BicycleParams& params() const noexcept { return params_; }

  StateDerivative derivative(const VehicleState& state, const ControlInput& input,
                             double t) const override;
  ControlInput saturate(const ControlInput& input) const override;
  VehicleState project(const VehicleState& state) const override;
  std::unique_ptr<DynamicsModel> clone() const override;

 private:
  BicycleParams params_;
};

/// One classical RK4 step with the input held constant over [t, t + dt].
/// Heading is renormalized and the model projection applied afterwards.
/// Throws SimError(NonFiniteState) if the result is not finite.
VehicleState integrate_step(const DynamicsModel& model, const VehicleState& state,
                            const ControlInput& input, double t, double dt);

}  // namespace platoonsim
