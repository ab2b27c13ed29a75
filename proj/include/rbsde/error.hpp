#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbsde {

enum class ErrorCode {
  IntensityTooLarge,
  DegenerateLattice,
  LatticeTooLarge,
  LatticeMismatch,
  NegativeRate,
  ZeroRateWithoutFlag,
  TiltTooLarge,
  NonpositiveBeta,
  SchemeMismatch,
  InputsNotOrdered,
  NotComparable,
  DimensionTooLarge,
  TreeTooLarge,
  NonpositiveNu,
  NonpositiveCapital,
  NoConvergence,
  BracketFailure,
  Singular,
  SingularSigma,
  NonpositivePrice,
  BadJumpSize,
  JumpPremiumOutOfRange,
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. The message names the
/// violated invariant.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define RBSDE_REQUIRE(cond, code, msg)                   \
  do {                                                   \
    if (!(cond)) throw ::rbsde::Error((code), (msg));    \
  } while (0)

}  // namespace rbsde
