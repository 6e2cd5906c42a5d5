#include "platoonsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "platoonsim/error.hpp"

namespace platoonsim {

void validate(const AccParams& p) {
  if (!(p.d0 > 0.0 && p.h > 0.0 && p.k_g > 0.0 && p.k_v > 0.0 && p.cruise_speed > 0.0))
    throw SimError(ErrorCode::InvalidArgument, "ACC parameters must all be positive");
}

void validate(const PurePursuitParams& p) {
  if (!(p.lookahead_base > 0.0)) throw SimError(ErrorCode::InvalidArgument, "lookahead_base must be > 0");
  if (!(p.lookahead_gain >= 0.0)) throw SimError(ErrorCode::InvalidArgument, "lookahead_gain must be >= 0");
  if (!(p.wheelbase > 0.0)) throw SimError(ErrorCode::InvalidArgument, "wheelbase must be > 0");
}

double pure_pursuit_steer(const VehicleState& state, const Trajectory& trajectory,
                          const PurePursuitParams& params, double delta_max) {
  if (trajectory.empty()) throw SimError(ErrorCode::EmptyTrajectory, "no reference to track");
  const double lookahead = params.lookahead_base + params.lookahead_gain * std::max(state.v, 0.0);
  auto it = std::find_if(trajectory.points.begin(), trajectory.points.end(),
                         [&](const TrajectoryPoint& p) { return p.arc_length >= lookahead; });
  const TrajectoryPoint& target = it == trajectory.points.end() ? trajectory.points.back() : *it;
  const Vec2 rel = to_body_frame(state.pose(), target.position);
  const double dist = rel.norm();
  if (dist < 1e-9) return 0.0;
  const double alpha = std::atan2(rel.y, rel.x);
  const double delta = std::atan(2.0 * params.wheelbase * std::sin(alpha) / dist);
  return std::clamp(delta, -delta_max, delta_max);
}

std::optional<NeighborMeasurement> same_lane_leader(const PerceptionData& perception,
                                                    double lane_width) {
  for (const auto& n : perception.neighbors) {
    if (n.rel_position.x > 0.0 && std::abs(n.rel_position.y) < lane_width / 2.0) return n;
  }
  return std::nullopt;
}

double acc_accel(const VehicleState& state, const PerceptionData& perception, const AccParams& p,
                 const InputLimits& limits, double lane_width) {
  double a = 0.0;
  if (const auto leader = same_lane_leader(perception, lane_width)) {
    const double gap = leader->rel_position.x;
    const double v_leader = state.v + leader->rel_velocity.x;
    a = p.k_g * (gap - p.d0 - p.h * state.v) + p.k_v * (v_leader - state.v);
  } else {
    a = p.k_v * (p.cruise_speed - state.v);
  }
  return std::clamp(a, limits.a_min, limits.a_max);
}

LaneChangeDecision lane_change_supervisor(const VehicleState& /*state*/,
                                          const PerceptionData& perception, const RouteState& route,
                                          const LaneChangeWindow& window) {
  for (const auto& n : perception.neighbors) {
    if (!n.lane || *n.lane != route.current_lane) continue;
    if (n.rel_position.x >= -window.lag_clear && n.rel_position.x <= window.lead_clear)
      return LaneChangeDecision::Hold;
  }
  return LaneChangeDecision::Proceed;
}

// --- platoons --------------------------------------------------------------------

std::optional<VehicleId> leader_of(const PlatoonDirective& directive) noexcept {
  if (const auto* f = std::get_if<Follow>(&directive.command)) return f->leader;
  if (const auto* m = std::get_if<Merge>(&directive.command)) return m->leader;
  return std::nullopt;
}

void check_leadership_forest(const std::map<VehicleId, PlatoonDirective>& directives) {
  for (const auto& [start, directive] : directives) {
    std::set<VehicleId> seen{start};
    auto next = leader_of(directive);
    while (next) {
      if (!seen.insert(*next).second)
        throw SimError(ErrorCode::CyclicLeadership,
                       "leader chain from vehicle " + std::to_string(start.value) + " loops");
      auto it = directives.find(*next);
      next = it == directives.end() ? std::nullopt : leader_of(it->second);
    }
  }
}

PlatoonCoordinator::PlatoonCoordinator(PlatoonParams params, double lane_width)
    : params_(params), lane_width_(lane_width) {}

std::map<VehicleId, AccParams> PlatoonCoordinator::platoon_step(
    const std::map<VehicleId, PlatoonDirective>& directives,
    const std::map<VehicleId, PlatoonMember>& members, double t) {
  check_leadership_forest(directives);
  std::map<VehicleId, AccParams> out;
  for (auto it = ramps_.begin(); it != ramps_.end();) {
    auto d = directives.find(it->first);
    if (d == directives.end() || !(d->second == it->second.directive))
      it = ramps_.erase(it);
    else
      ++it;
  }
  for (const auto& [id, directive] : directives) {
    AccParams p = params_.follow;
    if (const auto* split = std::get_if<Split>(&directive.command)) {
      p.d0 = split->gap_target;
    } else if (std::holds_alternative<Merge>(directive.command)) {
      auto ramp = ramps_.find(id);
      if (ramp == ramps_.end()) {
        double start_d0 = p.d0;
        auto m = members.find(id);
        if (m != members.end()) {
          if (const auto leader = same_lane_leader(m->second.perception, lane_width_))
            start_d0 = std::max(p.d0, leader->rel_position.x - p.h * m->second.state.v);
        }
        ramp = ramps_.emplace(id, RampState{directive, t, start_d0}).first;
      }
      const double T = params_.merge_ramp_time;
      const double progress = T > 0.0 ? std::clamp((t - ramp->second.start_time) / T, 0.0, 1.0) : 1.0;
      p.d0 = ramp->second.start_d0 + (params_.follow.d0 - ramp->second.start_d0) * progress;
    }
    out.emplace(id, p);
  }
  return out;
}

// --- reference controllers ----------------------------------------------------------

PurePursuitController::PurePursuitController(PurePursuitParams params, InputLimits limits)
    : params_(params), limits_(limits) {
  validate(params_);
}

double PurePursuitController::steering(const ControllerContext& ctx) {
  return pure_pursuit_steer(ctx.state, ctx.trajectory, params_, limits_.delta_max);
}

AccController::AccController(AccParams params, InputLimits limits, double comfort_decel)
    : params_(params), limits_(limits), comfort_decel_(comfort_decel) {
  validate(params_);
  if (!(comfort_decel_ > 0.0)) throw SimError(ErrorCode::InvalidArgument, "comfort_decel must be > 0");
}

double speed_target(const Trajectory& trajectory, double cruise_speed, double comfort_decel) noexcept {
  double target = cruise_speed;
  for (const auto& p : trajectory.points) {
    target = std::min(target, std::sqrt(p.speed_ref * p.speed_ref + 2.0 * comfort_decel * p.arc_length));
  }
  return target;
}

double AccController::acceleration(const ControllerContext& ctx) {
  const AccParams& p = ctx.acc_override ? *ctx.acc_override : params_;
  const double follow = acc_accel(ctx.state, ctx.perception, p, limits_, ctx.lane_width);
  const double v_target = speed_target(ctx.trajectory, p.cruise_speed, comfort_decel_);
  const double speed = std::clamp(p.k_v * (v_target - ctx.state.v), limits_.a_min, limits_.a_max);
  return std::min(follow, speed);
}

}  // namespace platoonsim
