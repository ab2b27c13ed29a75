#pragma once

// Slice kernels shared by every backward or forward pass over the tree. Each
// kernel maps one slice to the next with an OpenMP loop over nodes; per-node
// reductions over children run sequentially in slot order, so results do not
// depend on the thread count. Serial recursive counterparts live in
// reference.hpp and are used by the tests and the benchmark.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/parallel.hpp"

namespace rbsde {

/// ln sum_i p_i exp(-scale * v_i), shifted by the minimum exponent so that
/// large |v| neither overflows nor underflows. Entries with p_i = 0 are
/// skipped.
inline double log_mean_exp_neg(std::span<const double> values, std::span<const double> probs,
                               double scale = 1.0) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (probs[i] > 0.0) lo = std::min(lo, scale * values[i]);
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (probs[i] > 0.0) acc += probs[i] * std::exp(-(scale * values[i] - lo));
  return -lo + std::log(acc);
}

namespace kernels {

/// Backward conditional expectation under transition weights `weights` (the
/// slice k+1 row of a measure): out[n] = running(n) + sum_s w[nC+s] next[nC+s].
template <class Running>
void conditional_mean(const Lattice& lattice, int k, std::span<const double> weights,
                      std::span<const double> next, std::span<double> out, Running&& running) {
  const auto C = static_cast<std::size_t>(lattice.branching());
  parallel_for(lattice.level_size(k), [&](std::size_t n) {
    double acc = 0.0;
    for (std::size_t s = 0; s < C; ++s) acc += weights[n * C + s] * next[n * C + s];
    out[n] = running(n) + acc;
  });
}

/// Full backward pass of E^Q[sum_{k<K} running(k, n) + terminal | node].
/// Returns values on every slice.
template <class Running>
NodeValues backward_accumulate(const Lattice& lattice, const NodeValues& transitions,
                               const std::vector<double>& terminal, Running&& running) {
  const int K = lattice.steps();
  NodeValues acc(static_cast<std::size_t>(K) + 1);
  acc.back() = terminal;
  for (int k = K - 1; k >= 0; --k) {
    const auto lk = static_cast<std::size_t>(k);
    acc[lk].resize(lattice.level_size(k));
    conditional_mean(lattice, k, transitions[lk + 1], acc[lk + 1], acc[lk],
                     [&](std::size_t n) { return running(k, n); });
  }
  return acc;
}

/// Forward density propagation: Z_{k+1}(c) = Z_k(n) q_c / p_c.
void forward_density(const Lattice& lattice, const NodeValues& transitions, NodeValues& density);

/// Forward path probabilities: P(c) = P(n) q_c.
void forward_path_probability(const Lattice& lattice, const NodeValues& transitions,
                              NodeValues& path);

}  // namespace kernels
}  // namespace rbsde
