#include "rbsde/kernels.hpp"

namespace rbsde::kernels {

void forward_density(const Lattice& lattice, const NodeValues& transitions, NodeValues& density) {
  const int K = lattice.steps();
  const auto C = static_cast<std::size_t>(lattice.branching());
  density.assign(static_cast<std::size_t>(K) + 1, {});
  density[0].assign(1, 1.0);
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& q = transitions[lk + 1];
    const auto& parent = density[lk];
    auto& child = density[lk + 1];
    child.resize(lattice.level_size(k + 1));
    parallel_for(lattice.level_size(k), [&](std::size_t n) {
      const auto p = lattice.child_probs(k, n);
      for (std::size_t s = 0; s < C; ++s) child[n * C + s] = parent[n] * (q[n * C + s] / p[s]);
    });
  }
}

void forward_path_probability(const Lattice& lattice, const NodeValues& transitions,
                              NodeValues& path) {
  const int K = lattice.steps();
  const auto C = static_cast<std::size_t>(lattice.branching());
  path.assign(static_cast<std::size_t>(K) + 1, {});
  path[0].assign(1, 1.0);
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& q = transitions[lk + 1];
    const auto& parent = path[lk];
    auto& child = path[lk + 1];
    child.resize(lattice.level_size(k + 1));
    parallel_for(lattice.level_size(k), [&](std::size_t n) {
      for (std::size_t s = 0; s < C; ++s) child[n * C + s] = parent[n] * q[n * C + s];
    });
  }
}

}  // namespace rbsde::kernels
