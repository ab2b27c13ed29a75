#pragma once

// Discrete scenario tree for p Brownian coordinates and d counting processes.
//
// The tree is a full C-ary tree with C = 2^p (d+1). Nodes of time slice k are
// numbered 0..C^k-1 and the children of node n sit at n*C .. n*C+C-1 on slice
// k+1, so parent/child navigation is pure arithmetic. Child slot s encodes the
// increment label: jump outcome j = s / 2^p (0 = no jump, i >= 1 = channel i)
// and Brownian sign bits s % 2^p (bit m set means b_m = +1).

#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace rbsde {

struct TimeGrid {
  double horizon = 1.0;
  int steps = 1;

  TimeGrid() = default;
  TimeGrid(double horizon, int steps);

  double dt() const { return horizon / steps; }
  double time(int k) const { return k == steps ? horizon : k * dt(); }
};

/// Read-only view of the state at one node, handed to user callbacks.
struct NodeState {
  int level = 0;
  std::size_t node = 0;
  double t = 0.0;
  std::span<const double> w;   // Brownian path sums W_m(t_k)
  std::span<const int> jumps;  // counts H^i(t_k)
};

using IntensityFn = std::function<std::vector<double>(const NodeState&)>;

struct LatticeOptions {
  /// Permit p = d = 0: a single deterministic path.
  bool single_path = false;
  /// Upper bound on the total node count, as a guard on memory.
  std::size_t max_nodes = std::size_t{1} << 26;
};

/// Per-node values on every slice 0..K, indexed [level][node].
using NodeValues = std::vector<std::vector<double>>;

class Lattice {
 public:
  const TimeGrid& grid() const { return grid_; }
  int steps() const { return grid_.steps; }
  double dt() const { return grid_.dt(); }
  double sqrt_dt() const { return sqrt_dt_; }
  int brownian_dim() const { return p_; }
  int jump_channels() const { return d_; }
  int branching() const { return branching_; }
  int brownian_patterns() const { return 1 << p_; }

  std::size_t level_size(int k) const { return level_sizes_[static_cast<std::size_t>(k)]; }
  std::size_t node_count() const;
  std::size_t leaf_count() const { return level_size(steps()); }

  std::size_t child(std::size_t node, int slot) const {
    return node * static_cast<std::size_t>(branching_) + static_cast<std::size_t>(slot);
  }
  std::size_t parent(std::size_t node) const { return node / static_cast<std::size_t>(branching_); }
  int slot_of(std::size_t node) const {
    return static_cast<int>(node % static_cast<std::size_t>(branching_));
  }

  /// Increment labels of a child slot.
  int jump_outcome(int slot) const { return slot >> p_; }
  int brownian_sign(int slot, int m) const { return ((slot >> m) & 1) ? 1 : -1; }
  double brownian_increment(int slot, int m) const { return brownian_sign(slot, m) * sqrt_dt_; }

  /// Base transition probabilities of the children of (k, node); k < K.
  std::span<const double> child_probs(int k, std::size_t node) const {
    const auto& row = probs_[static_cast<std::size_t>(k) + 1];
    return {row.data() + child(node, 0), static_cast<std::size_t>(branching_)};
  }
  /// Probability of the transition into (k, node) from its parent; k >= 1.
  double transition_prob(int k, std::size_t node) const {
    return probs_[static_cast<std::size_t>(k)][node];
  }
  /// All transition probabilities, [k][n]; slice 0 holds the root's 1.
  const std::vector<std::vector<double>>& transitions() const { return probs_; }

  double intensity(int k, std::size_t node, int channel) const {
    return intensities_[static_cast<std::size_t>(k)][node * static_cast<std::size_t>(d_) +
                                                     static_cast<std::size_t>(channel)];
  }
  std::span<const double> intensities(int k, std::size_t node) const {
    const auto& row = intensities_[static_cast<std::size_t>(k)];
    return {row.data() + node * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)};
  }

  NodeState state(int k, std::size_t node) const;

  /// True when every intensity is node independent.
  bool deterministic_intensities() const { return deterministic_intensity_; }

  /// Writes `time_index,node_id,parent_id,brownian_signs,jump_outcome,base_prob`
  /// rows; pass a measure's transition probabilities to append `q_prob`.
  void write_nodes(std::ostream& os, const NodeValues* q_prob = nullptr) const;

 private:
  friend Lattice build_lattice(const TimeGrid&, int, int, const IntensityFn&,
                               const LatticeOptions&);
  Lattice() = default;

  TimeGrid grid_;
  int p_ = 0;
  int d_ = 0;
  int branching_ = 1;
  double sqrt_dt_ = 1.0;
  bool deterministic_intensity_ = true;
  std::vector<std::size_t> level_sizes_;
  // probs_[k][n]: transition probability into node n of slice k (k >= 1).
  std::vector<std::vector<double>> probs_;
  // intensities_[k][n*d + i], slices 0..K-1.
  std::vector<std::vector<double>> intensities_;
  std::vector<std::vector<double>> w_;
  std::vector<std::vector<int>> jumps_;
};

Lattice build_lattice(const TimeGrid& grid, int brownian_dim, int jump_channels,
                      const IntensityFn& intensity_fn, const LatticeOptions& options = {});

/// Constant intensities for every channel.
IntensityFn constant_intensity(std::vector<double> rates);

enum class ProcessKind { Adapted, TerminalOnly };

/// One real value per (time index, node).
struct AdaptedProcess {
  NodeValues values;
  ProcessKind kind = ProcessKind::Adapted;

  double at(int k, std::size_t node) const {
    return values[static_cast<std::size_t>(k)][node];
  }
  const std::vector<double>& slice(int k) const { return values[static_cast<std::size_t>(k)]; }
  std::vector<double>& slice(int k) { return values[static_cast<std::size_t>(k)]; }
};

using NodeFn = std::function<double(const NodeState&)>;

AdaptedProcess adapted_from_fn(const NodeFn& f, const Lattice& lattice);
AdaptedProcess constant_process(double value, const Lattice& lattice);
/// Values on the leaves only, as a TerminalOnly process.
AdaptedProcess terminal_from_fn(const NodeFn& f, const Lattice& lattice);
/// Leaf values of a process (its last slice).
const std::vector<double>& leaves(const AdaptedProcess& process);

NodeValues zero_values(const Lattice& lattice);

/// Discount rate and the derived left-Riemann product
/// S_{k} = prod_{j<k} exp(-delta_j dt), S_0 = 1.
struct DiscountSpec {
  AdaptedProcess rate;
  NodeValues factor;
  bool zero_mode = false;
  bool deterministic = true;

  double rate_at(int k, std::size_t node) const { return rate.at(k, node); }
  double factor_at(int k, std::size_t node) const {
    return factor[static_cast<std::size_t>(k)][node];
  }
};

/// Builds S^delta. Zero values are rejected unless allow_zero is set.
DiscountSpec discount_process(const AdaptedProcess& rate, const Lattice& lattice,
                              bool allow_zero = false);
DiscountSpec zero_discount(const Lattice& lattice);
DiscountSpec constant_discount(double rate, const Lattice& lattice);

}  // namespace rbsde
