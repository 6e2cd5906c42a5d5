#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace platoonsim {

enum class ErrorCode {
  InvalidArgument,
  InvalidSpec,
  UnknownSegment,
  UnknownConnectionPoint,
  Incompatible,
  AlreadyConnected,
  WouldTearJoint,
  NoCscSolution,
  UnknownLane,
  NonFiniteState,
  NoSuchLane,
  InvalidPrimitive,
  EmptyAhead,
  EmptyTrajectory,
  CyclicLeadership,
  DuplicateId,
  UnknownVehicle,
  ControllerAmbiguity,
  OffRoadSpawn,
  SpawnConflict,
  BlockedExit,
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for every failure the library reports; callers
/// branch on code().
class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace platoonsim
