#pragma once

#include <cstdint>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/measure.hpp"
#include "rbsde/oracle.hpp"

namespace rbsde {

struct VerifyOptions {
  std::uint64_t seed = 7;
  int samples = 100;
  int gateaux_pairs = 20;
  double grid_step = 0.02;
  /// Negative control: shifts the dp solver's values before checking.
  bool corrupt = false;
};

/// Largest tree the brute-force checks accept.
inline constexpr int kVerifyMaxSteps = 3;
inline constexpr int kVerifyMaxBranching = 4;

/// Cross-checks the solver against the brute-force oracles on one tree.
/// Refuses (TreeTooLarge) beyond kVerifyMaxSteps or kVerifyMaxBranching.
std::vector<OracleRow> run_verify(const Lattice& lattice, const CriterionSpec& spec,
                                  const VerifyOptions& options = {});

bool all_pass(const std::vector<OracleRow>& rows);

}  // namespace rbsde
