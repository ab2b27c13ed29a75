#pragma once

#include <functional>
#include <vector>

#include "rbsde/lattice.hpp"

namespace rbsde {

/// An absolutely continuous probability measure on the tree, stored as
/// per-node transition probabilities with the same layout as the base
/// lattice: q[k][n] is the probability of moving into node n of slice k.
/// The density process Z^Q (product of q/p along the path) is derived on
/// construction.
class NodeMeasure {
 public:
  NodeMeasure() = default;
  /// Takes ownership of transition probabilities; validates normalization.
  NodeMeasure(const Lattice& lattice, NodeValues transition);

  static NodeMeasure base(const Lattice& lattice);

  std::span<const double> child_probs(const Lattice& lattice, int k, std::size_t node) const {
    const auto& row = transition_[static_cast<std::size_t>(k) + 1];
    return {row.data() + lattice.child(node, 0), static_cast<std::size_t>(lattice.branching())};
  }
  double transition_prob(int k, std::size_t node) const {
    return transition_[static_cast<std::size_t>(k)][node];
  }
  double density(int k, std::size_t node) const {
    return density_[static_cast<std::size_t>(k)][node];
  }
  const NodeValues& transitions() const { return transition_; }
  const NodeValues& densities() const { return density_; }
  /// Q-probability of reaching each node from the root.
  NodeValues path_probabilities(const Lattice& lattice) const;

 private:
  NodeValues transition_;
  NodeValues density_;
};

/// Brownian drift loading theta (per coordinate) and log-intensity tilt z (per
/// channel) of a one-step Girsanov change.
struct GirsanovTilt {
  std::vector<double> theta;
  std::vector<double> z;
};

using TiltFn = std::function<GirsanovTilt(const NodeState&)>;

/// q(b, j) proportional to p(b, j) * prod_m (1 + theta_m b_m sqrt(dt)) * w_j,
/// w_0 = 1, w_j = exp(-z_j), renormalized per node.
NodeMeasure tilt_to_measure(const GirsanovTilt& tilt, const Lattice& lattice);
NodeMeasure tilt_to_measure(const TiltFn& tilt, const Lattice& lattice);

/// Exact per-step intensity implied by a measure at (k, node): the
/// probability of jump i divided by dt.
std::vector<double> implied_intensity(const NodeMeasure& q, const Lattice& lattice, int k,
                                      std::size_t node);

/// E^Q[ln Z^Q_T] with 0 ln 0 = 0.
double relative_entropy(const NodeMeasure& q, const Lattice& lattice);

/// KL(q_node || p_node) for one node.
double node_kl(const NodeMeasure& q, const Lattice& lattice, int k, std::size_t node);

enum class EntropyForm { Riemann, StepwiseKl };

/// Discounted penalty E^Q[R^delta_{0,T}(Q)].
///   Riemann:    E^Q[sum_k delta_k S_k ln Z_k dt + S_K ln Z_K]
///   StepwiseKl: E^Q[sum_k S_k KL(q_node || p_node)]
double discounted_entropy(const NodeMeasure& q, const DiscountSpec& discount,
                          const Lattice& lattice, EntropyForm form = EntropyForm::StepwiseKl);

struct CriterionSpec {
  AdaptedProcess cost;       // U, slices 0..K-1 used
  std::vector<double> terminal;  // U_T bar per leaf
  DiscountSpec discount;
  double beta = 1.0;
};

/// Gamma(Q) = E^Q[sum_k S_k U_k dt + S_K U_T] + beta * discounted_entropy.
double criterion_gamma(const CriterionSpec& spec, const NodeMeasure& q, const Lattice& lattice,
                       EntropyForm form = EntropyForm::StepwiseKl);

/// Rescales to beta = 1: U/beta, U_T/beta.
CriterionSpec beta_reduce(const CriterionSpec& spec);

/// E^Q[sum_{k<K} running_k dt + terminal] computed by a backward pass of
/// conditional expectations. Slices of `running` beyond K-1 are ignored.
double expectation(const NodeMeasure& q, const Lattice& lattice, const NodeValues* running,
                   const std::vector<double>& terminal);

}  // namespace rbsde
