#pragma once

#include <stdexcept>
#include <string>

namespace coagprofile {

/// Failure categories surfaced by the library. The CLI maps these to process
/// exit codes; library users can switch on them to distinguish bad inputs
/// from genuine numerical failure.
enum class ErrorCode {
  InvalidArgument,      ///< malformed or out-of-contract input
  IoError,              ///< file could not be read/written/parsed
  NumericRange,         ///< a value left the representable range (scaled reals, overflow)
  QuadratureNoConverge, ///< adaptive quadrature hit its subdivision limit
  RegionDegenerate,     ///< an integration region collapsed unexpectedly
  SingularSystem,       ///< the 2x2 normalization system is (near-)singular
  NonAdmissibleParams,  ///< parameters violate the admissibility constraints
  ContractionFailure,   ///< fixed-point iteration stopped contracting
  MaxIterExceeded,      ///< iteration budget exhausted before reaching tolerance
  BallEscape,           ///< an iterate left the invariant ball of the map
  FitWindowTooShort,    ///< not enough samples in a fitting window
};

const char* to_string(ErrorCode code);

/// Exception type carrying an ErrorCode alongside the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

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

}  // namespace coagprofile
