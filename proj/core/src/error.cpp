#include "rsmaplace/error.hpp"

namespace rsmaplace {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UserInsideBuilding: return "UserInsideBuilding";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::NonBinaryAssociation: return "NonBinaryAssociation";
    case ErrorCode::NonZeroCommonPower: return "NonZeroCommonPower";
    case ErrorCode::NegativeMultiplier: return "NegativeMultiplier";
    case ErrorCode::SubproblemInfeasible: return "SubproblemInfeasible";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
    case ErrorCode::InfeasibleInit: return "InfeasibleInit";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace rsmaplace
