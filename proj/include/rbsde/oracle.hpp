#pragma once

// Brute-force checks of the minimization over measures, independent of the
// closed-form one-step operator used by the solver.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rbsde/bsdej.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/measure.hpp"

namespace rbsde {

struct GridMin {
  std::vector<double> q;
  double value = 0.0;
};

/// Exhaustive minimum of q.x + KL(q || p) over the simplex grid with the given
/// step (vectors of length <= 4). Ties go to the lexicographically smallest q.
GridMin dv_onestep_grid(std::span<const double> p, std::span<const double> x, double grid_step);

struct TreeGridMin {
  NodeMeasure q;
  double value = 0.0;
};

/// Minimizes the stepwise-KL criterion node by node with dv_onestep_grid.
/// Limited to K <= 3 and at most 4 children per node.
TreeGridMin tree_min_grid(const CriterionSpec& spec, const Lattice& lattice, double grid_step);

/// Random equivalent measure: per-node Girsanov tilt with theta drawn from
/// U(-theta_max, theta_max) (clipped to the validity bound) and z from
/// U(-z_max, z_max).
NodeMeasure random_tilted_measure(const Lattice& lattice, std::mt19937_64& rng,
                                  double theta_max = 1.0, double z_max = 1.0);

/// Random measure with arbitrary positive per-node weights, not restricted to
/// the Girsanov family.
NodeMeasure random_measure(const Lattice& lattice, std::mt19937_64& rng, double spread = 1.0);

struct JointSearch {
  double best = 0.0;
  int samples = 0;
};

/// Minimum of the criterion over independently sampled whole-tree measures.
/// Never below the true minimum; used to cross-check the node-wise
/// decomposition without relying on it.
JointSearch joint_random_search(const CriterionSpec& spec, const Lattice& lattice, int samples,
                                std::uint64_t seed);

/// Solves the criterion after beta reduction; the returned value process is
/// rescaled by beta.
BsdeSolution solve_criterion(const CriterionSpec& spec, const Lattice& lattice, Scheme scheme);

/// Worst signed gap min_{theta, node} (Y^theta - theta Y1 - (1 - theta) Y2).
double concavity_check(const CriterionSpec& spec1, const CriterionSpec& spec2,
                       const std::vector<double>& thetas, const Lattice& lattice, Scheme scheme);

struct OracleRow {
  std::string name;
  double oracle = 0.0;
  double solver = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// `check,oracle,solver,gap,tolerance,pass` with %.17g numbers.
void write_oracle_report(std::ostream& os, const std::vector<OracleRow>& rows);

}  // namespace rbsde
