#pragma once

#include <stdexcept>
#include <string>

namespace kgrag {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Parse,
  Provider,
  VersionMismatch,
  Corrupt,
  Internal,
};

const char* error_code_name(ErrorCode code) noexcept;

/// All library failures surface as this exception; the C API maps
/// ErrorCode onto its status enum at the boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Provider: return "provider";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::Corrupt: return "corrupt";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace kgrag
