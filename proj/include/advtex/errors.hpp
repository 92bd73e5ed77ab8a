#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace advtex {

enum class ErrorCode {
  MalformedLine,
  IndexOutOfRange,
  MissingUV,
  InvalidMesh,
  IsolatedVertex,
  UnsupportedKind,
  GimbalLock,
  InvalidConfig,
  ShapeMismatch,
  ResolutionMismatch,
  DivergedLoss,
  ChecksumMismatch,
  SpecMismatch,
  RigMismatch,
  NotApplicable,
  InvalidArgument,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingUV: return "MissingUV";
    case ErrorCode::InvalidMesh: return "InvalidMesh";
    case ErrorCode::IsolatedVertex: return "IsolatedVertex";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::GimbalLock: return "GimbalLock";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::RigMismatch: return "RigMismatch";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// the CLI can map it onto an exit status without string matching.
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

}  // namespace advtex
