#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nanomvg {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kBadMagic,
  kUnsupportedVersion,
  kMalformedManifest,
  kOverlappingEntries,
  kBlobOutOfBounds,
  kMissingParameter,
  kUnexpectedParameter,
  kDuplicateParameter,
  kIo,
  kParse,
  kState,
};

std::string_view error_code_name(ErrorCode code);

// Every rejected input or malformed file surfaces as this type. The code is
// stable and tests switch on it; the message carries the offending values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace nanomvg
