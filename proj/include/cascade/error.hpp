#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascade {

enum class ErrorCode {
  InvalidDimension,
  DimensionMismatch,
  IndexOutOfRange,
  InvalidParameter,
  UnsupportedConfiguration,
  AmbiguousSteadyState,
  NonConvergence,
  StepSizeUnderflow,
  TraceDrift,
  IntegratorFailure,
  UndefinedG2,
  SingularParameter,
  DegenerateExpansion,
  UnstablePoint,
  NoUniqueSolution,
  EmptyGrid,
  SameMode,
  TruncationInconsistent,
  Config,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies the
// failure class so callers (and the sweep runner) can record it as data.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace cascade
