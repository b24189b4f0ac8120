#pragma once

#include <stdexcept>
#include <string>

namespace anm {

enum class ErrorCode {
  MalformedDocument,
  MissingSection,
  BadField,
  SingularBranch,
  Diverged,
  ArityMismatch,
  DivergedState,
  InvalidConfig,
  InitStateInfeasible,
  NotReset,
  Closed,
  ProfileFileMissing,
  ProfileArityMismatch,
  ProfileChecksumMismatch,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; the code tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace anm
