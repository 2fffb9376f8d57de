#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptsim {

enum class ErrorCode {
  MissingColumn,
  BadTimestamp,
  NegativeDuration,
  MalformedCsv,
  SyntaxError,
  ArityError,
  WeightError,
  BadNodeId,
  InvariantViolation,
  Explosion,
  EmptyLog,
  NoReplayableTraces,
  TooFewCases,
  UnboundedLoop,
  DeadlockDetected,
  InvalidArgument,
  NotFound,
  Conflict,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library surfaces as this exception; the
// code is stable and machine readable, the detail carries diagnostics such as
// a row index or a parse position.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ptsim
