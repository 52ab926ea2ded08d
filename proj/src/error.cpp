#include "realvul/error.hpp"

namespace realvul {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateCve: return "DuplicateCve";
    case ErrorCode::kEmptyManifest: return "EmptyManifest";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTokenBudgetExceeded: return "TokenBudgetExceeded";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kCorruptIndex: return "CorruptIndex";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kUnresolvableParent: return "UnresolvableParent";
    case ErrorCode::kBudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::kMissingContext: return "MissingContext";
    case ErrorCode::kUnexpectedContext: return "UnexpectedContext";
    case ErrorCode::kContextLeak: return "ContextLeak";
    case ErrorCode::kContextOverflow: return "ContextOverflow";
    case ErrorCode::kReplayMiss: return "ReplayMiss";
    case ErrorCode::kNetworkForbidden: return "NetworkForbidden";
    case ErrorCode::kJudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::kRangeViolation: return "RangeViolation";
    case ErrorCode::kEmptyAxis: return "EmptyAxis";
    case ErrorCode::kNoContextAvailable: return "NoContextAvailable";
    case ErrorCode::kEmptyLog: return "EmptyLog";
    case ErrorCode::kCorruptLog: return "CorruptLog";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace realvul
