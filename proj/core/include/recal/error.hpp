#pragma once

#include <stdexcept>
#include <string>

namespace recal {

/// Failure categories raised by the library. The CLI maps each category
/// onto a process exit code (see `exit_code_for`).
enum class ErrorCode {
  kNegativeMass,
  kMassSumOutOfTolerance,
  kEmptySupport,
  kInvalidSupport,
  kIndexOutOfRange,
  kOutOfSupport,
  kDuplicateKey,
  kMissingObservation,
  kEmptyDataset,
  kInsufficientData,
  kDegenerateData,
  kParameterOutOfRange,
  kDomainError,
  kNoObservations,
  kSupportMismatch,
  kInsufficientSeasons,
  kKeyMisalignment,
  kNonIntegrable,
  kLeakage,
  kParseError,
  kIoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Exit-code contract: 2 parse, 3 missing data, 4 insufficient data,
/// 5 structural mismatch, 1 anything else.
int exit_code_for(ErrorCode code) noexcept;

}  // namespace recal
