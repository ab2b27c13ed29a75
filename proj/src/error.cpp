#include "rbsde/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rbsde/parallel.hpp"

namespace rbsde {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IntensityTooLarge: return "IntensityTooLarge";
    case ErrorCode::DegenerateLattice: return "DegenerateLattice";
    case ErrorCode::LatticeTooLarge: return "LatticeTooLarge";
    case ErrorCode::LatticeMismatch: return "LatticeMismatch";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::ZeroRateWithoutFlag: return "ZeroRateWithoutFlag";
    case ErrorCode::TiltTooLarge: return "TiltTooLarge";
    case ErrorCode::NonpositiveBeta: return "NonpositiveBeta";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::InputsNotOrdered: return "InputsNotOrdered";
    case ErrorCode::NotComparable: return "NotComparable";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::TreeTooLarge: return "TreeTooLarge";
    case ErrorCode::NonpositiveNu: return "NonpositiveNu";
    case ErrorCode::NonpositiveCapital: return "NonpositiveCapital";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::SingularSigma: return "SingularSigma";
    case ErrorCode::NonpositivePrice: return "NonpositivePrice";
    case ErrorCode::BadJumpSize: return "BadJumpSize";
    case ErrorCode::JumpPremiumOutOfRange: return "JumpPremiumOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

void set_thread_count(int n) {
#ifdef _OPENMP
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
#else
  (void)n;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace rbsde
