#include "ssq/error.hpp"

namespace ssq {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroInverse: return "ZeroInverse";
    case ErrorCode::kDuplicateX: return "DuplicateX";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kInsufficientShares: return "InsufficientShares";
    case ErrorCode::kTooWide: return "TooWide";
    case ErrorCode::kUnknownSymbol: return "UnknownSymbol";
    case ErrorCode::kBadEncoding: return "BadEncoding";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kRidExists: return "RidExists";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kPrimeMismatch: return "PrimeMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBadPartition: return "BadPartition";
    case ErrorCode::kInsufficientServers: return "InsufficientServers";
    case ErrorCode::kNotUnique: return "NotUnique";
    case ErrorCode::kPaddingTooSmall: return "PaddingTooSmall";
    case ErrorCode::kZeroPayload: return "ZeroPayload";
    case ErrorCode::kInconsistentShares: return "InconsistentShares";
    case ErrorCode::kUnknownAttribute: return "UnknownAttribute";
  }
  return "Unknown";
}

}  // namespace ssq
