#include "litatlas/error.hpp"

namespace litatlas {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidDocument: return "InvalidDocument";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kCorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::kMissingSnapshot: return "MissingSnapshot";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kUnknownTerm: return "UnknownTerm";
    case ErrorCode::kUnknownDocument: return "UnknownDocument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNumericalDivergence: return "NumericalDivergence";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace litatlas
