#pragma once

#include <map>
#include <memory>
#include <optional>
#include <variant>

#include "platoonsim/dynamics.hpp"
#include "platoonsim/guidance.hpp"
#include "platoonsim/perception.hpp"
#include "platoonsim/trajectory.hpp"

namespace platoonsim {

struct InputLimits {
  double a_min = -6.0;
  double a_max = 3.0;
  double delta_max = 0.6;

  static InputLimits from(const BicycleParams& p) noexcept { return {p.a_min, p.a_max, p.delta_max}; }
  friend bool operator==(const InputLimits&, const InputLimits&) = default;
};

/// Constant time-headway spacing: desired gap d0 + h*v.
struct AccParams {
  double d0 = 5.0;
  double h = 0.8;
  double k_g = 0.3;
  double k_v = 0.6;
  double cruise_speed = 15.0;

  friend bool operator==(const AccParams&, const AccParams&) = default;
};

struct PurePursuitParams {
  double lookahead_base = 4.0;
  double lookahead_gain = 0.4;
  double wheelbase = 2.5;

  friend bool operator==(const PurePursuitParams&, const PurePursuitParams&) = default;
};

void validate(const AccParams& p);
void validate(const PurePursuitParams& p);

/// Steering toward the first reference point at least L0 + k_L*v along the
/// (preprocessed) trajectory. Throws EmptyTrajectory.
double pure_pursuit_steer(const VehicleState& state, const Trajectory& trajectory,
                          const PurePursuitParams& params, double delta_max);

/// Nearest neighbor ahead (positive longitudinal coordinate) whose lateral
/// body offset is below half a lane width.
std::optional<NeighborMeasurement> same_lane_leader(const PerceptionData& perception,
                                                    double lane_width);

/// Linear constant time-headway ACC law, clamped to [a_min, a_max].
double acc_accel(const VehicleState& state, const PerceptionData& perception, const AccParams& params,
                 const InputLimits& limits, double lane_width);

struct LaneChangeWindow {
  double lead_clear = 15.0;
  double lag_clear = 10.0;

  friend bool operator==(const LaneChangeWindow&, const LaneChangeWindow&) = default;
};

enum class LaneChangeDecision { Proceed, Hold };

/// Proceed iff no neighbor associated with the target lane (route.current_lane)
/// lies within [-lag_clear, +lead_clear] longitudinally.
LaneChangeDecision lane_change_supervisor(const VehicleState& state, const PerceptionData& perception,
                                          const RouteState& route, const LaneChangeWindow& window);

// --- platoon supervision -------------------------------------------------------

struct Follow {
  VehicleId leader;
  friend bool operator==(const Follow&, const Follow&) = default;
};
struct Split {
  double gap_target = 0.0;
  friend bool operator==(const Split&, const Split&) = default;
};
/// Join the platoon whose tail vehicle is `leader`.
struct Merge {
  VehicleId leader;
  friend bool operator==(const Merge&, const Merge&) = default;
};

using PlatoonCommand = std::variant<Follow, Split, Merge>;
enum class PlatoonRole { Leader, Follower };

struct PlatoonDirective {
  PlatoonCommand command;
  PlatoonRole role = PlatoonRole::Follower;
  friend bool operator==(const PlatoonDirective&, const PlatoonDirective&) = default;
};

/// Leader implied by a directive; a split vehicle heads its own platoon.
std::optional<VehicleId> leader_of(const PlatoonDirective& directive) noexcept;

/// Throws SimError(CyclicLeadership) unless the leader relation is a forest.
void check_leadership_forest(const std::map<VehicleId, PlatoonDirective>& directives);

struct PlatoonParams {
  AccParams follow;
  double merge_ramp_time = 10.0;

  friend bool operator==(const PlatoonParams&, const PlatoonParams&) = default;
};

struct PlatoonMember {
  VehicleState state;
  PerceptionData perception;
};

/// Turns platoon directives into per-vehicle ACC parameters. Holds the merge
/// ramp timers, so one instance should live for the whole run.
class PlatoonCoordinator {
 public:
  explicit PlatoonCoordinator(PlatoonParams params = {}, double lane_width = 3.5);

  const PlatoonParams& params() const noexcept { return params_; }

  std::map<VehicleId, AccParams> platoon_step(const std::map<VehicleId, PlatoonDirective>& directives,
                                              const std::map<VehicleId, PlatoonMember>& members,
                                              double t);

 private:
  struct RampState {
    PlatoonDirective directive;
    double start_time = 0.0;
    double start_d0 = 0.0;
  };

  PlatoonParams params_;
  double lane_width_;
  std::map<VehicleId, RampState> ramps_;
};

// --- controller interfaces -------------------------------------------------------

struct ControllerContext {
  VehicleId id;
  VehicleState state;
  const PerceptionData& perception;
  const Trajectory& trajectory;  ///< preprocessed reference, may be empty
  double t = 0.0;
  double lane_width = 3.5;
  std::optional<AccParams> acc_override;
};

class CombinedController {
 public:
  virtual ~CombinedController() = default;
  virtual ControlInput compute(const ControllerContext& ctx) = 0;
};

class LateralController {
 public:
  virtual ~LateralController() = default;
  virtual double steering(const ControllerContext& ctx) = 0;
};

class LongitudinalController {
 public:
  virtual ~LongitudinalController() = default;
  virtual double acceleration(const ControllerContext& ctx) = 0;
};

/// Always outputs zero acceleration and zero steering.
class ZeroController final : public CombinedController {
 public:
  ControlInput compute(const ControllerContext&) override { return {}; }
};

class PurePursuitController final : public LateralController {
 public:
  PurePursuitController(PurePursuitParams params, InputLimits limits);
  double steering(const ControllerContext& ctx) override;

 private:
  PurePursuitParams params_;
  InputLimits limits_;
};

/// ACC combined with a speed law that respects the reference speed ahead:
/// a = min(acc_accel, k_v * (v_target - v)), where v_target is the lowest of
/// cruise_speed and sqrt(v_ref^2 + 2*b*s) over the reference points.
class AccController final : public LongitudinalController {
 public:
  AccController(AccParams params, InputLimits limits, double comfort_decel = 2.0);
  double acceleration(const ControllerContext& ctx) override;
  const AccParams& params() const noexcept { return params_; }

 private:
  AccParams params_;
  InputLimits limits_;
  double comfort_decel_;
};

/// Speed the vehicle may drive now so it can still meet every speed reference ahead.
double speed_target(const Trajectory& trajectory, double cruise_speed, double comfort_decel) noexcept;

}  // namespace platoonsim
