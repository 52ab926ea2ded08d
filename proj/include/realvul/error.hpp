#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace realvul {

enum class ErrorCode {
  kMalformedRecord,
  kDuplicateCve,
  kEmptyManifest,
  kUnsupportedVersion,
  kEmptyInput,
  kTokenBudgetExceeded,
  kProviderError,
  kDimensionMismatch,
  kZeroVector,
  kEmptyDocument,
  kIoError,
  kCorruptIndex,
  kVersionMismatch,
  kUnresolvableParent,
  kBudgetTooSmall,
  kMissingContext,
  kUnexpectedContext,
  kContextLeak,
  kContextOverflow,
  kReplayMiss,
  kNetworkForbidden,
  kJudgeUnavailable,
  kRangeViolation,
  kEmptyAxis,
  kNoContextAvailable,
  kEmptyLog,
  kCorruptLog,
  kInvalidConfig,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (the harness log, the CLI exit-code map) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace realvul
