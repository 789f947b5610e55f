#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aemr {

enum class ErrorCode {
  Parse,
  NonMonotoneIndex,
  NegativeDistance,
  LengthMismatch,
  NonBinaryAllele,
  MissingMember,
  DuplicateMember,
  DuplicateFamily,
  UnmatchedFamily,
  ImpossibleHaplotype,
  FlankNotHeterozygous,
  NoHeterozygousFlank,
  InvalidConditioning,
  InvalidArgument,
  Config,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type. `code()` lets callers
// (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for failures caused by malformed input data rather than a bad
  // invocation or configuration.
  bool is_data_error() const noexcept {
    return code_ != ErrorCode::InvalidArgument && code_ != ErrorCode::Config &&
           code_ != ErrorCode::InvalidConditioning;
  }

 private:
  ErrorCode code_;
};

}  // namespace aemr
