#include "recal/error.hpp"

namespace recal {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kNegativeMass: return "NegativeMass";
    case ErrorCode::kMassSumOutOfTolerance: return "MassSumOutOfTolerance";
    case ErrorCode::kEmptySupport: return "EmptySupport";
    case ErrorCode::kInvalidSupport: return "InvalidSupport";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kOutOfSupport: return "OutOfSupport";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kMissingObservation: return "MissingObservation";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kNoObservations: return "NoObservations";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kInsufficientSeasons: return "InsufficientSeasons";
    case ErrorCode::kKeyMisalignment: return "KeyMisalignment";
    case ErrorCode::kNonIntegrable: return "NonIntegrable";
    case ErrorCode::kLeakage: return "Leakage";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kNegativeMass:
    case ErrorCode::kMassSumOutOfTolerance:
    case ErrorCode::kEmptySupport:
    case ErrorCode::kInvalidSupport:
    case ErrorCode::kDuplicateKey:
      return 2;
    case ErrorCode::kMissingObservation:
    case ErrorCode::kNoObservations:
    case ErrorCode::kEmptyDataset:
      return 3;
    case ErrorCode::kInsufficientData:
    case ErrorCode::kInsufficientSeasons:
    case ErrorCode::kDegenerateData:
    case ErrorCode::kParameterOutOfRange:
      return 4;
    case ErrorCode::kSupportMismatch:
    case ErrorCode::kKeyMisalignment:
      return 5;
    default:
      return 1;
  }
}

}  // namespace recal
