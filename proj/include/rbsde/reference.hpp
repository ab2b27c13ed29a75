#pragma once

// Serial reference implementations. They walk the tree depth first with plain
// recursion and share no code with the slice kernels, so the tests can compare
// the parallel solvers against them bit for bit, and the benchmark can time
// both.

#include <vector>

#include "rbsde/bsdej.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/measure.hpp"

namespace rbsde::reference {

/// Y on every slice by depth-first recursion.
NodeValues solve_values(const Lattice& lattice, const AdaptedProcess& cost,
                        const std::vector<double>& terminal, const DiscountSpec& discount,
                        Scheme scheme);

/// Serial slice-by-slice loop with the same per-node arithmetic as the
/// parallel kernel and no OpenMP.
NodeValues solve_values_serial(const Lattice& lattice, const AdaptedProcess& cost,
                               const std::vector<double>& terminal,
                               const DiscountSpec& discount, Scheme scheme);

/// E^Q[sum_k running_k dt + terminal] by depth-first recursion.
double expectation(const NodeMeasure& q, const Lattice& lattice, const NodeValues* running,
                   const std::vector<double>& terminal);

}  // namespace rbsde::reference
