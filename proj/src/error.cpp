#include "anm/error.hpp"

namespace anm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::BadField: return "BadField";
    case ErrorCode::SingularBranch: return "SingularBranch";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::DivergedState: return "DivergedState";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InitStateInfeasible: return "InitStateInfeasible";
    case ErrorCode::NotReset: return "NotReset";
    case ErrorCode::Closed: return "Closed";
    case ErrorCode::ProfileFileMissing: return "ProfileFileMissing";
    case ErrorCode::ProfileArityMismatch: return "ProfileArityMismatch";
    case ErrorCode::ProfileChecksumMismatch: return "ProfileChecksumMismatch";
  }
  return "Unknown";
}

}  // namespace anm
