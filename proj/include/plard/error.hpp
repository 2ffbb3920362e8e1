#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plard {

enum class ErrorCode {
  TruncatedRecord,
  NonFiniteValue,
  MissingKey,
  WrongArity,
  OutOfBounds,
  WindowTooSmall,
  ShapeMismatch,
  DimensionMismatch,
  SingularHomography,
  EmptyInput,
  EmptyDataset,
  DegenerateGeometry,
  InvalidConfig,
  Io,
  Numerical,
};

std::string_view to_string(ErrorCode code);

/// Every library failure is reported through this exception type; `code()`
/// identifies the failure class so callers (the CLI in particular) can map it
/// onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace plard
