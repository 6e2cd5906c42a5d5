#include "platoonsim/dynamics.hpp"

#include <algorithm>

#include "platoonsim/error.hpp"

namespace platoonsim {

bool VehicleState::finite() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) && std::isfinite(v);
}

void validate(const BicycleParams& p) {
  auto fail = [](const char* what) { throw SimError(ErrorCode::InvalidArgument, what); };
  if (!(p.wheelbase > 0.0)) fail("wheelbase must be > 0");
  if (!(p.delta_max > 0.0 && p.delta_max < kPi / 2.0)) fail("delta_max must lie in (0, pi/2)");
  if (!(p.v_max > 0.0)) fail("v_max must be > 0");
  if (!(p.a_min < 0.0 && p.a_max > 0.0)) fail("need a_min < 0 < a_max");
}

ControlInput saturate(const ControlInput& input, const BicycleParams& p) noexcept {
  return {std::clamp(input.a, p.a_min, p.a_max), std::clamp(input.delta, -p.delta_max, p.delta_max)};
}

StateDerivative bicycle_derivative(const VehicleState& s, const ControlInput& input, double /*t*/,
                                   const BicycleParams& p) noexcept {
  const ControlInput u = saturate(input, p);
  const double v = std::max(s.v, 0.0);
  StateDerivative d;
  d.x = v * std::cos(s.theta);
  d.y = v * std::sin(s.theta);
  d.theta = v * std::tan(u.delta) / p.wheelbase;
  d.v = (s.v <= 0.0 && u.a < 0.0) ? 0.0 : u.a;
  return d;
}

BicycleModel::BicycleModel(BicycleParams params) : params_(params) { validate(params_); }

StateDerivative BicycleModel::derivative(const VehicleState& state, const ControlInput& input,
                                         double t) const {
  return bicycle_derivative(state, input, t, params_);
}

ControlInput BicycleModel::saturate(const ControlInput& input) const {
  return platoonsim::saturate(input, params_);
}

VehicleState BicycleModel::project(const VehicleState& state) const {
  VehicleState out = state;
  out.v = std::clamp(state.v, 0.0, params_.v_max);
  return out;
}

std::unique_ptr<DynamicsModel> BicycleModel::clone() const {
  return std::make_unique<BicycleModel>(*this);
}

namespace {

VehicleState advance(const VehicleState& s, const StateDerivative& d, double h) {
  return {s.x + h * d.x, s.y + h * d.y, s.theta + h * d.theta, s.v + h * d.v};
}

}  // namespace

VehicleState integrate_step(const DynamicsModel& model, const VehicleState& s,
                            const ControlInput& input, double t, double dt) {
  if (!(dt > 0.0)) throw SimError(ErrorCode::InvalidArgument, "dt must be > 0");
  const ControlInput u = model.saturate(input);
  const StateDerivative k1 = model.derivative(s, u, t);
  const StateDerivative k2 = model.derivative(advance(s, k1, dt / 2.0), u, t + dt / 2.0);
  const StateDerivative k3 = model.derivative(advance(s, k2, dt / 2.0), u, t + dt / 2.0);
  const StateDerivative k4 = model.derivative(advance(s, k3, dt), u, t + dt);
  VehicleState out;
  out.x = s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.y = s.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  out.theta = s.theta + dt / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
  out.v = s.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  if (!out.finite()) throw SimError(ErrorCode::NonFiniteState, "integration produced a non-finite state");
  out.theta = normalize_angle(out.theta);
  return model.project(out);
}

}  // namespace platoonsim
