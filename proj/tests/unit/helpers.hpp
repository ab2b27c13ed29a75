#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/measure.hpp"

namespace testing {

inline rbsde::Lattice make_lattice(double horizon, int steps, int p, int d, double lambda = 0.3) {
  rbsde::LatticeOptions opt;
  opt.single_path = p == 0 && d == 0;
  return rbsde::build_lattice(rbsde::TimeGrid(horizon, steps), p, d,
                              rbsde::constant_intensity(std::vector<double>(
                                  static_cast<std::size_t>(d), lambda)),
                              opt);
}

inline rbsde::AdaptedProcess random_process(const rbsde::Lattice& lattice, std::mt19937_64& rng,
                                            double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  auto proc = rbsde::constant_process(0.0, lattice);
  for (auto& slice : proc.values)
    for (auto& v : slice) v = u(rng);
  return proc;
}

inline std::vector<double> random_leaves(const rbsde::Lattice& lattice, std::mt19937_64& rng,
                                         double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(lattice.leaf_count());
  for (auto& v : out) v = u(rng);
  return out;
}

inline double max_abs_diff(const rbsde::NodeValues& a, const rbsde::NodeValues& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t n = 0; n < a[k].size(); ++n)
      worst = std::max(worst, std::abs(a[k][n] - b[k][n]));
  return worst;
}

}  // namespace testing
