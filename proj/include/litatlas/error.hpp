#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace litatlas {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidDocument,
  kIoFailure,
  kCorruptSnapshot,
  kMissingSnapshot,
  kTransportError,
  kMalformedResponse,
  kEmptyCorpus,
  kUnknownTerm,
  kUnknownDocument,
  kDimensionMismatch,
  kNumericalDivergence,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library is an Error carrying a code; the
/// message is "<code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace litatlas
