#include "rbsde/measure.hpp"

#include <cmath>

#include "rbsde/error.hpp"
#include "rbsde/kernels.hpp"

namespace rbsde {

namespace {

constexpr double kNormTolerance = 1e-14;

double xlogx_ratio(double q, double p) { return q > 0.0 ? q * std::log(q / p) : 0.0; }

double safe_log(double z) { return z > 0.0 ? std::log(z) : 0.0; }

}  // namespace

NodeMeasure::NodeMeasure(const Lattice& lattice, NodeValues transition)
    : transition_(std::move(transition)) {
  const int K = lattice.steps();
  RBSDE_REQUIRE(transition_.size() == static_cast<std::size_t>(K) + 1,
                ErrorCode::LatticeMismatch, "measure has the wrong number of slices");
  if (transition_[0].empty()) transition_[0].assign(1, 1.0);
  const auto C = static_cast<std::size_t>(lattice.branching());
  for (int k = 0; k < K; ++k) {
    const auto& row = transition_[static_cast<std::size_t>(k) + 1];
    RBSDE_REQUIRE(row.size() == lattice.level_size(k + 1), ErrorCode::LatticeMismatch,
                  "measure slice size mismatch");
    for (std::size_t n = 0; n < lattice.level_size(k); ++n) {
      double sum = 0.0;
      for (std::size_t s = 0; s < C; ++s) {
        RBSDE_REQUIRE(row[n * C + s] >= 0.0, ErrorCode::InvalidArgument,
                      "transition probabilities must be nonnegative");
        sum += row[n * C + s];
      }
      RBSDE_REQUIRE(std::abs(sum - 1.0) <= kNormTolerance * static_cast<double>(C),
                    ErrorCode::InvalidArgument, "transition probabilities must sum to 1");
    }
  }
  kernels::forward_density(lattice, transition_, density_);
}

NodeMeasure NodeMeasure::base(const Lattice& lattice) {
  return NodeMeasure(lattice, lattice.transitions());
}

NodeValues NodeMeasure::path_probabilities(const Lattice& lattice) const {
  NodeValues path;
  kernels::forward_path_probability(lattice, transition_, path);
  return path;
}

NodeMeasure tilt_to_measure(const TiltFn& tilt, const Lattice& lattice) {
  const int K = lattice.steps();
  const int p = lattice.brownian_dim();
  const int d = lattice.jump_channels();
  const auto C = static_cast<std::size_t>(lattice.branching());
  const double sqdt = lattice.sqrt_dt();
  NodeValues q(static_cast<std::size_t>(K) + 1);
  q[0].assign(1, 1.0);
  for (int k = 0; k < K; ++k) {
    auto& row = q[static_cast<std::size_t>(k) + 1];
    row.resize(lattice.level_size(k + 1));
    for (std::size_t n = 0; n < lattice.level_size(k); ++n) {
      const GirsanovTilt g = tilt(lattice.state(k, n));
      RBSDE_REQUIRE(g.theta.size() == static_cast<std::size_t>(p) &&
                        g.z.size() == static_cast<std::size_t>(d),
                    ErrorCode::InvalidArgument, "tilt dimensions do not match the lattice");
      const auto base = lattice.child_probs(k, n);
      double total = 0.0;
      for (std::size_t s = 0; s < C; ++s) {
        const int slot = static_cast<int>(s);
        double w = base[s];
        for (int m = 0; m < p; ++m) {
          const double factor =
              1.0 + g.theta[static_cast<std::size_t>(m)] * lattice.brownian_sign(slot, m) * sqdt;
          RBSDE_REQUIRE(factor > 0.0, ErrorCode::TiltTooLarge,
                        "Brownian tilt factor 1 + theta b sqrt(dt) must stay positive");
          w *= factor;
        }
        const int j = lattice.jump_outcome(slot);
        if (j > 0) w *= std::exp(-g.z[static_cast<std::size_t>(j - 1)]);
        row[n * C + s] = w;
        total += w;
      }
      for (std::size_t s = 0; s < C; ++s) row[n * C + s] /= total;
    }
  }
  return NodeMeasure(lattice, std::move(q));
}

NodeMeasure tilt_to_measure(const GirsanovTilt& tilt, const Lattice& lattice) {
  return tilt_to_measure([&tilt](const NodeState&) { return tilt; }, lattice);
}

std::vector<double> implied_intensity(const NodeMeasure& q, const Lattice& lattice, int k,
                                      std::size_t node) {
  const int d = lattice.jump_channels();
  std::vector<double> rates(static_cast<std::size_t>(d), 0.0);
  const auto probs = q.child_probs(lattice, k, node);
  for (int s = 0; s < lattice.branching(); ++s) {
    const int j = lattice.jump_outcome(s);
    if (j > 0) rates[static_cast<std::size_t>(j - 1)] += probs[static_cast<std::size_t>(s)];
  }
  for (auto& r : rates) r /= lattice.dt();
  return rates;
}

double node_kl(const NodeMeasure& q, const Lattice& lattice, int k, std::size_t node) {
  const auto qs = q.child_probs(lattice, k, node);
  const auto ps = lattice.child_probs(k, node);
  double kl = 0.0;
  for (std::size_t s = 0; s < qs.size(); ++s) kl += xlogx_ratio(qs[s], ps[s]);
  return kl;
}

double relative_entropy(const NodeMeasure& q, const Lattice& lattice) {
  // Direct definition: sum over leaves of Q(path) ln Z_T(path).
  const auto path = q.path_probabilities(lattice);
  const int K = lattice.steps();
  const auto& z = q.densities()[static_cast<std::size_t>(K)];
  const auto& pq = path[static_cast<std::size_t>(K)];
  double h = 0.0;
  for (std::size_t n = 0; n < pq.size(); ++n)
    if (pq[n] > 0.0) h += pq[n] * std::log(z[n]);
  return h;
}

double discounted_entropy(const NodeMeasure& q, const DiscountSpec& discount,
                          const Lattice& lattice, EntropyForm form) {
  const int K = lattice.steps();
  const double dt = lattice.dt();
  const auto& density = q.densities();
  NodeValues acc;
  if (form == EntropyForm::StepwiseKl) {
    std::vector<double> terminal(lattice.leaf_count(), 0.0);
    acc = kernels::backward_accumulate(lattice, q.transitions(), terminal, [&](int k, std::size_t n) {
      return discount.factor_at(k, n) * node_kl(q, lattice, k, n);
    });
  } else {
    std::vector<double> terminal(lattice.leaf_count());
    const auto& zk = density[static_cast<std::size_t>(K)];
    for (std::size_t n = 0; n < terminal.size(); ++n)
      terminal[n] = discount.factor_at(K, n) * safe_log(zk[n]);
    acc = kernels::backward_accumulate(lattice, q.transitions(), terminal, [&](int k, std::size_t n) {
      return discount.rate_at(k, n) * discount.factor_at(k, n) *
             safe_log(density[static_cast<std::size_t>(k)][n]) * dt;
    });
  }
  return acc[0][0];
}

double expectation(const NodeMeasure& q, const Lattice& lattice, const NodeValues* running,
                   const std::vector<double>& terminal) {
  const double dt = lattice.dt();
  const auto acc = kernels::backward_accumulate(
      lattice, q.transitions(), terminal, [&](int k, std::size_t n) {
        return running ? (*running)[static_cast<std::size_t>(k)][n] * dt : 0.0;
      });
  return acc[0][0];
}

double criterion_gamma(const CriterionSpec& spec, const NodeMeasure& q, const Lattice& lattice,
                       EntropyForm form) {
  const int K = lattice.steps();
  RBSDE_REQUIRE(spec.terminal.size() == lattice.leaf_count(), ErrorCode::LatticeMismatch,
                "terminal values do not match the leaves");
  const double dt = lattice.dt();
  std::vector<double> terminal(spec.terminal.size());
  for (std::size_t n = 0; n < terminal.size(); ++n)
    terminal[n] = spec.discount.factor_at(K, n) * spec.terminal[n];
  const auto acc = kernels::backward_accumulate(
      lattice, q.transitions(), terminal, [&](int k, std::size_t n) {
        return spec.discount.factor_at(k, n) * spec.cost.at(k, n) * dt;
      });
  return acc[0][0] + spec.beta * discounted_entropy(q, spec.discount, lattice, form);
}

CriterionSpec beta_reduce(const CriterionSpec& spec) {
  RBSDE_REQUIRE(spec.beta > 0.0, ErrorCode::NonpositiveBeta, "penalty weight beta must be > 0");
  CriterionSpec out = spec;
  for (auto& slice : out.cost.values)
    for (auto& v : slice) v /= spec.beta;
  for (auto& v : out.terminal) v /= spec.beta;
  out.beta = 1.0;
  return out;
}

}  // namespace rbsde
