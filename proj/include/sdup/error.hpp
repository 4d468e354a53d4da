#pragma once

#include <stdexcept>
#include <string>

namespace sdup {

enum class ErrorCode {
  parameter,
  division_by_zero,
  insufficient_shares,
  duplicate_share,
  malformed,
  session_mismatch,
  routing,
  unreachable,
  configuration,
  model_limit,
  io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parameter: return "parameter error";
    case ErrorCode::division_by_zero: return "division by zero";
    case ErrorCode::insufficient_shares: return "insufficient shares";
    case ErrorCode::duplicate_share: return "duplicate share";
    case ErrorCode::malformed: return "malformed input";
    case ErrorCode::session_mismatch: return "session mismatch";
    case ErrorCode::routing: return "routing error";
    case ErrorCode::unreachable: return "destination unreachable";
    case ErrorCode::configuration: return "configuration error";
    case ErrorCode::model_limit: return "model limit exceeded";
    case ErrorCode::io: return "I/O error";
  }
  return "unknown error";
}

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI's exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sdup
