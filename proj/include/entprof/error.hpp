#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entprof {

enum class ErrorCode {
  kInvalidStep,
  kEmptyTrajectory,
  kMalformedLine,
  kSchemaViolation,
  kMissingChosenLogprob,
  kEmptyInput,
  kQOutOfRange,
  kSingleClass,
  kDegenerateInput,
  kDomainMismatch,
  kTooFewRows,
  kNonConvergence,
  kDimensionMismatch,
  kEmptyDomain,
  kDomainOverlap,
  kEmptyHoldout,
  kKOutOfRange,
  kEmptyBucket,
  kInvalidConfig,
  kInfeasibleEntropy,
  kTargetOutOfRange,
  kIo,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidStep: return "InvalidStep";
    case ErrorCode::kEmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kMissingChosenLogprob: return "MissingChosenLogprob";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kQOutOfRange: return "QOutOfRange";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kDomainMismatch: return "DomainMismatch";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyDomain: return "EmptyDomain";
    case ErrorCode::kDomainOverlap: return "DomainOverlap";
    case ErrorCode::kEmptyHoldout: return "EmptyHoldout";
    case ErrorCode::kKOutOfRange: return "KOutOfRange";
    case ErrorCode::kEmptyBucket: return "EmptyBucket";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInfeasibleEntropy: return "InfeasibleEntropy";
    case ErrorCode::kTargetOutOfRange: return "TargetOutOfRange";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace entprof
