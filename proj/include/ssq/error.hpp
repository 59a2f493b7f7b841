#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssq {

enum class ErrorCode {
  kZeroInverse,
  kDuplicateX,
  kBadParams,
  kInsufficientShares,
  kTooWide,
  kUnknownSymbol,
  kBadEncoding,
  kOverflow,
  kRidExists,
  kCorruptFile,
  kPrimeMismatch,
  kShapeMismatch,
  kBadPartition,
  kInsufficientServers,
  kNotUnique,
  kPaddingTooSmall,
  kZeroPayload,
  kInconsistentShares,
  kUnknownAttribute,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ssq
