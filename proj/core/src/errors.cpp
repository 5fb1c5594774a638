#include "coagprofile/errors.hpp"

namespace coagprofile {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NumericRange: return "NumericRange";
    case ErrorCode::QuadratureNoConverge: return "QuadratureNoConverge";
    case ErrorCode::RegionDegenerate: return "RegionDegenerate";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonAdmissibleParams: return "NonAdmissibleParams";
    case ErrorCode::ContractionFailure: return "ContractionFailure";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::BallEscape: return "BallEscape";
    case ErrorCode::FitWindowTooShort: return "FitWindowTooShort";
  }
  return "UnknownError";
}

}  // namespace coagprofile
