#include "forge/core/error.hpp"

namespace forge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::CorruptSample: return "CorruptSample";
    case ErrorCode::MissingOrgan: return "MissingOrgan";
    case ErrorCode::InvalidStats: return "InvalidStats";
    case ErrorCode::MissingMaterial: return "MissingMaterial";
    case ErrorCode::UnconstrainedSystem: return "UnconstrainedSystem";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::LatticeCoverageError: return "LatticeCoverageError";
    case ErrorCode::MissingThreshold: return "MissingThreshold";
    case ErrorCode::DegenerateStats: return "DegenerateStats";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::InvalidPrediction: return "InvalidPrediction";
    case ErrorCode::InvalidProtocol: return "InvalidProtocol";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::CorruptSample:
    case ErrorCode::InvalidGeometry:
    case ErrorCode::LatticeCoverageError:
    case ErrorCode::MissingOrgan:
    case ErrorCode::IoError:
      return 3;
    case ErrorCode::SolverFailure:
    case ErrorCode::UnconstrainedSystem:
    case ErrorCode::DegenerateStats:
      return 4;
    default:
      return 2;
  }
}

}  // namespace forge
