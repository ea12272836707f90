#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tripmine {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MissingFile,
  ParseError,
  DanglingReference,
  UnknownStop,
  TooFewPoints,
  WeakKey,
  UnknownPseudonym,
  LengthMismatch,
  BadReference,
  InsufficientHistory,
  MalformedXml,
  MalformedGeoJson,
  MissingSegmentId,
  NonLineStringGeometry,
  NoConsent,
  InvalidEnvelope,
  FeedUnavailable,
  NotFound,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. The code is what callers branch on;
// detail carries location information (file:line, offending id, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace tripmine
