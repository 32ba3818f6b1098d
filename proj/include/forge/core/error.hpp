#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class ErrorCode {
  EmptyInput,
  InvalidGeometry,
  InvalidArgument,
  InvalidInput,
  ParseError,
  SchemaError,
  CorruptSample,
  MissingOrgan,
  InvalidStats,
  MissingMaterial,
  UnconstrainedSystem,
  SolverFailure,
  LatticeCoverageError,
  MissingThreshold,
  DegenerateStats,
  ShapeError,
  InvalidPrediction,
  InvalidProtocol,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for an error: 2 config/schema, 3 data corruption,
/// 4 numerical failure.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace forge
