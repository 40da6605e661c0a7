#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bair {

enum class ErrorCode {
  kEmptyInput,
  kNonFinite,
  kInvalidArgument,
  kLayoutMismatch,
  kNoVisualTokens,
  kZeroVisualMass,
  kDuplicateTarget,
  kMissingTarget,
  kVersionMismatch,
  kLengthMismatch,
  kSpanOverlap,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this type. `code()` is stable and
// machine-readable; `what()` carries the offending location.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bair
