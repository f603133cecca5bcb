#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vdasap {

enum class ErrorCode {
  kInvalidGrid,
  kOutOfRange,
  kInvalidQuantity,
  kDemandExceeded,
  kBelowReserve,
  kNonMonotone,
  kMisalignedRequirement,
  kAlignment,
  kPrecondition,
  kInstanceTooLarge,
  kInfeasible,
  kConfig,
  kDivergence,
  kFingerprintMismatch,
  kIo,
  kFormat,
};

std::string_view to_string(ErrorCode code);

// Process exit status for the CLI: 2 validation, 3 config/io, 4 numeric divergence.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<int> lot = std::nullopt)
      : std::runtime_error(message), code_(code), lot_(lot) {}

  ErrorCode code() const { return code_; }
  // Zero-based index of the offending lot, when the error concerns one.
  std::optional<int> lot() const { return lot_; }

 private:
  ErrorCode code_;
  std::optional<int> lot_;
};

}  // namespace vdasap
