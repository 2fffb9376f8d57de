#include "ptsim/error.hpp"

namespace ptsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadTimestamp: return "BadTimestamp";
    case ErrorCode::NegativeDuration: return "NegativeDuration";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::WeightError: return "WeightError";
    case ErrorCode::BadNodeId: return "BadNodeId";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::Explosion: return "Explosion";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::NoReplayableTraces: return "NoReplayableTraces";
    case ErrorCode::TooFewCases: return "TooFewCases";
    case ErrorCode::UnboundedLoop: return "UnboundedLoop";
    case ErrorCode::DeadlockDetected: return "DeadlockDetected";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
  }
  return "Unknown";
}

}  // namespace ptsim
