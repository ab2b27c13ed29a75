#include "rbsde/reference.hpp"

#include "rbsde/kernels.hpp"

namespace rbsde::reference {

namespace {

struct Dfs {
  const Lattice& lattice;
  const AdaptedProcess& cost;
  const std::vector<double>& terminal;
  const DiscountSpec& discount;
  Scheme scheme;
  NodeValues& out;

  double visit(int k, std::size_t node) {
    double y;
    if (k == lattice.steps()) {
      y = terminal[node];
    } else {
      const int C = lattice.branching();
      std::vector<double> v(static_cast<std::size_t>(C));
      for (int s = 0; s < C; ++s) v[static_cast<std::size_t>(s)] = visit(k + 1, lattice.child(node, s));
      const double dt = lattice.dt();
      y = one_step_entropic(v, lattice.child_probs(k, node), cost.at(k, node) * dt,
                            discount.rate_at(k, node) * dt, scheme);
    }
    out[static_cast<std::size_t>(k)][node] = y;
    return y;
  }
};

double expect_dfs(const NodeMeasure& q, const Lattice& lattice, const NodeValues* running,
                  const std::vector<double>& terminal, int k, std::size_t node) {
  if (k == lattice.steps()) return terminal[node];
  const auto w = q.child_probs(lattice, k, node);
  double acc = 0.0;
  for (int s = 0; s < lattice.branching(); ++s)
    acc += w[static_cast<std::size_t>(s)] *
           expect_dfs(q, lattice, running, terminal, k + 1, lattice.child(node, s));
  const double run = running ? (*running)[static_cast<std::size_t>(k)][node] * lattice.dt() : 0.0;
  return run + acc;
}

}  // namespace

NodeValues solve_values(const Lattice& lattice, const AdaptedProcess& cost,
                        const std::vector<double>& terminal, const DiscountSpec& discount,
                        Scheme scheme) {
  NodeValues out = zero_values(lattice);
  Dfs dfs{lattice, cost, terminal, discount, scheme, out};
  dfs.visit(0, 0);
  return out;
}

NodeValues solve_values_serial(const Lattice& lattice, const AdaptedProcess& cost,
                               const std::vector<double>& terminal,
                               const DiscountSpec& discount, Scheme scheme) {
  const int K = lattice.steps();
  const auto C = static_cast<std::size_t>(lattice.branching());
  const double dt = lattice.dt();
  NodeValues out(static_cast<std::size_t>(K) + 1);
  out.back() = terminal;
  for (int k = K - 1; k >= 0; --k) {
    const auto lk = static_cast<std::size_t>(k);
    out[lk].resize(lattice.level_size(k));
    for (std::size_t n = 0; n < out[lk].size(); ++n) {
      const std::span<const double> v(out[lk + 1].data() + n * C, C);
      out[lk][n] = one_step_entropic(v, lattice.child_probs(k, n), cost.at(k, n) * dt,
                                     discount.rate_at(k, n) * dt, scheme);
    }
  }
  return out;
}

double expectation(const NodeMeasure& q, const Lattice& lattice, const NodeValues* running,
                   const std::vector<double>& terminal) {
  return expect_dfs(q, lattice, running, terminal, 0, 0);
}

}  // namespace rbsde::reference
