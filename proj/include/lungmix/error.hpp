#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lungmix {

enum class ErrorKind {
  kInvalidConfig,
  kEmptyAudio,
  kShapeMismatch,
  kRateMismatch,
  kSchemaMismatch,
  kNumericalError,
  kUnknownLabel,
  kParseError,
  kMissingAudio,
  kInsufficientData,
  kIoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the categories above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace lungmix
