#include "platoonsim/error.hpp"

namespace platoonsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnknownSegment: return "UnknownSegment";
    case ErrorCode::UnknownConnectionPoint: return "UnknownConnectionPoint";
    case ErrorCode::Incompatible: return "Incompatible";
    case ErrorCode::AlreadyConnected: return "AlreadyConnected";
    case ErrorCode::WouldTearJoint: return "WouldTearJoint";
    case ErrorCode::NoCscSolution: return "NoCscSolution";
    case ErrorCode::UnknownLane: return "UnknownLane";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NoSuchLane: return "NoSuchLane";
    case ErrorCode::InvalidPrimitive: return "InvalidPrimitive";
    case ErrorCode::EmptyAhead: return "EmptyAhead";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::CyclicLeadership: return "CyclicLeadership";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownVehicle: return "UnknownVehicle";
    case ErrorCode::ControllerAmbiguity: return "ControllerAmbiguity";
    case ErrorCode::OffRoadSpawn: return "OffRoadSpawn";
    case ErrorCode::SpawnConflict: return "SpawnConflict";
    case ErrorCode::BlockedExit: return "BlockedExit";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace platoonsim
