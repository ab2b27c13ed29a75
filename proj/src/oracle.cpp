#include "rbsde/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "rbsde/error.hpp"
#include "rbsde/parallel.hpp"

namespace rbsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double value = kInf;
  std::vector<long> counts;
};

// Lexicographic enumeration of the compositions of `remaining` into the
// coordinates [i, n); tables[i][m] is coordinate i's cost at q_i = m / N.
void enumerate(const std::vector<std::vector<double>>& tables, std::size_t i, long remaining,
               double partial, std::vector<long>& counts, Candidate& best) {
  const std::size_t n = tables.size();
  if (i + 1 == n) {
    counts[i] = remaining;
    const double v = partial + tables[i][static_cast<std::size_t>(remaining)];
    if (v < best.value) {
      best.value = v;
      best.counts = counts;
    }
    return;
  }
  for (long m = 0; m <= remaining; ++m) {
    const double t = tables[i][static_cast<std::size_t>(m)];
    if (t == kInf) continue;
    counts[i] = m;
    enumerate(tables, i + 1, remaining - m, partial + t, counts, best);
  }
}

}  // namespace

GridMin dv_onestep_grid(std::span<const double> p, std::span<const double> x, double grid_step) {
  RBSDE_REQUIRE(p.size() == x.size() && !p.empty(), ErrorCode::InvalidArgument,
                "p and x must be nonempty and of equal length");
  RBSDE_REQUIRE(p.size() <= 4, ErrorCode::DimensionTooLarge,
                "simplex grid search is limited to 4 coordinates");
  RBSDE_REQUIRE(grid_step > 0.0 && grid_step <= 0.1, ErrorCode::InvalidArgument,
                "grid step must lie in (0, 0.1]");
  const long N = std::lround(1.0 / grid_step);
  const std::size_t n = p.size();

  std::vector<std::vector<double>> tables(n, std::vector<double>(static_cast<std::size_t>(N) + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (long m = 0; m <= N; ++m) {
      const double q = static_cast<double>(m) / static_cast<double>(N);
      double cost;
      if (m == 0) cost = 0.0;
      else if (p[i] <= 0.0) cost = kInf;
      else cost = q * x[i] + q * std::log(q / p[i]);
      tables[i][static_cast<std::size_t>(m)] = cost;
    }
  }

  std::vector<long> counts(n, 0);
  Candidate best;
  if (n == 1) {
    counts[0] = N;
    best.value = tables[0][static_cast<std::size_t>(N)];
    best.counts = counts;
  } else {
    // One independent search per value of the first coordinate, merged in
    // ascending order with a strict comparison to keep the lexicographic
    // tie-break.
    std::vector<Candidate> partial(static_cast<std::size_t>(N) + 1);
    parallel_for(partial.size(), [&](std::size_t m0) {
      const double t = tables[0][m0];
      if (t == kInf) return;
      std::vector<long> local(n, 0);
      local[0] = static_cast<long>(m0);
      enumerate(tables, 1, N - static_cast<long>(m0), t, local, partial[m0]);
    });
    for (auto& c : partial)
      if (c.value < best.value) best = std::move(c);
  }
  RBSDE_REQUIRE(std::isfinite(best.value), ErrorCode::InvalidArgument,
                "no feasible grid point (p has no positive entry)");
  GridMin out;
  out.value = best.value;
  out.q.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.q[i] = static_cast<double>(best.counts[i]) / static_cast<double>(N);
  return out;
}

TreeGridMin tree_min_grid(const CriterionSpec& spec, const Lattice& lattice, double grid_step) {
  RBSDE_REQUIRE(lattice.steps() <= 3 && lattice.branching() <= 4, ErrorCode::TreeTooLarge,
                "tree grid search needs K <= 3 and at most 4 children per node");
  RBSDE_REQUIRE(spec.beta > 0.0, ErrorCode::NonpositiveBeta, "penalty weight beta must be > 0");
  const int K = lattice.steps();
  const double dt = lattice.dt();
  const auto C = static_cast<std::size_t>(lattice.branching());

  NodeValues w(static_cast<std::size_t>(K) + 1);
  NodeValues q(static_cast<std::size_t>(K) + 1);
  q[0].assign(1, 1.0);
  w.back() = spec.terminal;
  for (int k = K - 1; k >= 0; --k) {
    const auto lk = static_cast<std::size_t>(k);
    w[lk].resize(lattice.level_size(k));
    q[lk + 1].resize(lattice.level_size(k + 1));
    for (std::size_t n = 0; n < w[lk].size(); ++n) {
      const double factor = std::exp(-spec.discount.rate_at(k, n) * dt);
      std::vector<double> x(C);
      for (std::size_t s = 0; s < C; ++s) x[s] = factor * w[lk + 1][n * C + s] / spec.beta;
      const GridMin g = dv_onestep_grid(lattice.child_probs(k, n), x, grid_step);
      w[lk][n] = spec.cost.at(k, n) * dt + spec.beta * g.value;
      for (std::size_t s = 0; s < C; ++s) q[lk + 1][n * C + s] = g.q[s];
    }
  }
  return {NodeMeasure(lattice, std::move(q)), w[0][0]};
}

NodeMeasure random_tilted_measure(const Lattice& lattice, std::mt19937_64& rng, double theta_max,
                                  double z_max) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double bound = 0.9 / lattice.sqrt_dt();
  const double th = std::min(theta_max, bound);
  const auto p = static_cast<std::size_t>(lattice.brownian_dim());
  const auto d = static_cast<std::size_t>(lattice.jump_channels());
  return tilt_to_measure(
      [&](const NodeState&) {
        GirsanovTilt g;
        g.theta.resize(p);
        g.z.resize(d);
        for (auto& v : g.theta) v = th * unit(rng);
        for (auto& v : g.z) v = z_max * unit(rng);
        return g;
      },
      lattice);
}

namespace {

NodeMeasure measure_from_logits(const Lattice& lattice, const NodeValues& logits) {
  const int K = lattice.steps();
  const auto C = static_cast<std::size_t>(lattice.branching());
  NodeValues q(static_cast<std::size_t>(K) + 1);
  q[0].assign(1, 1.0);
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    q[lk + 1].resize(lattice.level_size(k + 1));
    for (std::size_t n = 0; n < lattice.level_size(k); ++n) {
      const auto p = lattice.child_probs(k, n);
      double hi = -kInf;
      for (std::size_t s = 0; s < C; ++s) hi = std::max(hi, logits[lk + 1][n * C + s]);
      double total = 0.0;
      for (std::size_t s = 0; s < C; ++s) {
        const double v = p[s] * std::exp(logits[lk + 1][n * C + s] - hi);
        q[lk + 1][n * C + s] = v;
        total += v;
      }
      for (std::size_t s = 0; s < C; ++s) q[lk + 1][n * C + s] /= total;
    }
  }
  return NodeMeasure(lattice, std::move(q));
}

NodeValues random_logits(const Lattice& lattice, std::mt19937_64& rng, double spread) {
  std::normal_distribution<double> normal(0.0, 1.0);
  NodeValues logits = zero_values(lattice);
  for (std::size_t k = 1; k < logits.size(); ++k)
    for (auto& v : logits[k]) v = spread * normal(rng);
  return logits;
}

}  // namespace

NodeMeasure random_measure(const Lattice& lattice, std::mt19937_64& rng, double spread) {
  return measure_from_logits(lattice, random_logits(lattice, rng, spread));
}

JointSearch joint_random_search(const CriterionSpec& spec, const Lattice& lattice, int samples,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> spread(0.0, 3.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // First half: global samples. Second half: Gaussian perturbations of the
  // incumbent logits with a shrinking radius.
  NodeValues best_logits = zero_values(lattice);
  JointSearch out;
  out.best = criterion_gamma(spec, NodeMeasure::base(lattice), lattice);
  const int global = samples / 2;
  for (int i = 0; i < samples; ++i) {
    NodeValues logits;
    if (i < global) {
      logits = random_logits(lattice, rng, spread(rng));
    } else {
      const double radius = 0.5 * std::pow(1e-3, static_cast<double>(i - global) /
                                                       static_cast<double>(samples - global));
      logits = best_logits;
      for (std::size_t k = 1; k < logits.size(); ++k)
        for (auto& v : logits[k]) v += radius * normal(rng);
    }
    const double value = criterion_gamma(spec, measure_from_logits(lattice, logits), lattice);
    if (value < out.best) {
      out.best = value;
      best_logits = std::move(logits);
    }
  }
  out.samples = samples;
  return out;
}

BsdeSolution solve_criterion(const CriterionSpec& spec, const Lattice& lattice, Scheme scheme) {
  const CriterionSpec reduced = beta_reduce(spec);
  BsdeSolution sol =
      solve_bsdej(lattice, reduced.cost, reduced.terminal, reduced.discount, scheme);
  if (spec.beta != 1.0) {
    for (auto* block : {&sol.value, &sol.brownian, &sol.jump})
      for (auto& slice : *block)
        for (auto& v : slice) v *= spec.beta;
    sol.cost = spec.cost;
  }
  return sol;
}

double concavity_check(const CriterionSpec& spec1, const CriterionSpec& spec2,
                       const std::vector<double>& thetas, const Lattice& lattice, Scheme scheme) {
  RBSDE_REQUIRE(spec1.beta == spec2.beta, ErrorCode::InvalidArgument,
                "concavity check needs a common beta");
  const auto sol1 = solve_criterion(spec1, lattice, scheme);
  const auto sol2 = solve_criterion(spec2, lattice, scheme);
  double worst = kInf;
  for (double theta : thetas) {
    RBSDE_REQUIRE(theta > 0.0 && theta < 1.0, ErrorCode::InvalidArgument,
                  "mixing weight must lie in (0, 1)");
    CriterionSpec mix = spec1;
    for (std::size_t k = 0; k < mix.cost.values.size(); ++k)
      for (std::size_t n = 0; n < mix.cost.values[k].size(); ++n)
        mix.cost.values[k][n] =
            theta * spec1.cost.values[k][n] + (1.0 - theta) * spec2.cost.values[k][n];
    for (std::size_t n = 0; n < mix.terminal.size(); ++n)
      mix.terminal[n] = theta * spec1.terminal[n] + (1.0 - theta) * spec2.terminal[n];
    const auto solm = solve_criterion(mix, lattice, scheme);
    for (std::size_t k = 0; k < solm.value.size(); ++k)
      for (std::size_t n = 0; n < solm.value[k].size(); ++n)
        worst = std::min(worst, solm.value[k][n] - theta * sol1.value[k][n] -
                                    (1.0 - theta) * sol2.value[k][n]);
  }
  return worst;
}

void write_oracle_report(std::ostream& os, const std::vector<OracleRow>& rows) {
  os << "check,oracle,solver,gap,tolerance,pass\n";
  char buf[128];
  for (const auto& r : rows) {
    os << r.name;
    for (double v : {r.oracle, r.solver, r.gap, r.tolerance}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      os << buf;
    }
    os << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace rbsde
