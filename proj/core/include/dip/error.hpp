#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dip {

enum class ErrorKind {
  InvalidShape,
  InvalidRange,
  ShapeMismatch,
  DegenerateNormalization,
  NotAScalar,
  DivergenceDetected,
  InvalidMask,
  DecodeError,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (tests, the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidShape: return "InvalidShape";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateNormalization: return "DegenerateNormalization";
    case ErrorKind::NotAScalar: return "NotAScalar";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::InvalidMask: return "InvalidMask";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace dip
