#include "rbsde/lattice.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "rbsde/error.hpp"
#include "rbsde/parallel.hpp"

namespace rbsde {

TimeGrid::TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
  RBSDE_REQUIRE(horizon > 0.0 && std::isfinite(horizon), ErrorCode::InvalidArgument,
                "time grid horizon must be positive");
  RBSDE_REQUIRE(steps >= 1, ErrorCode::InvalidArgument, "time grid needs at least one step");
}

std::size_t Lattice::node_count() const {
  std::size_t total = 0;
  for (auto n : level_sizes_) total += n;
  return total;
}

NodeState Lattice::state(int k, std::size_t node) const {
  const auto lk = static_cast<std::size_t>(k);
  NodeState s;
  s.level = k;
  s.node = node;
  s.t = grid_.time(k);
  s.w = {w_[lk].data() + node * static_cast<std::size_t>(p_), static_cast<std::size_t>(p_)};
  s.jumps = {jumps_[lk].data() + node * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)};
  return s;
}

void Lattice::write_nodes(std::ostream& os, const NodeValues* q_prob) const {
  os << "time_index,node_id,parent_id,brownian_signs,jump_outcome,base_prob";
  if (q_prob) os << ",q_prob";
  os << '\n';
  os.precision(17);
  for (int k = 0; k <= steps(); ++k) {
    for (std::size_t n = 0; n < level_size(k); ++n) {
      os << k << ',' << n << ',';
      if (k == 0) {
        os << "-1,,0,1";
        if (q_prob) os << ",1";
        os << '\n';
        continue;
      }
      const int s = slot_of(n);
      os << parent(n) << ',';
      for (int m = 0; m < p_; ++m) os << (brownian_sign(s, m) > 0 ? '+' : '-');
      os << ',' << jump_outcome(s) << ',' << transition_prob(k, n);
      if (q_prob) os << ',' << (*q_prob)[static_cast<std::size_t>(k)][n];
      os << '\n';
    }
  }
}

IntensityFn constant_intensity(std::vector<double> rates) {
  return [rates = std::move(rates)](const NodeState&) { return rates; };
}

Lattice build_lattice(const TimeGrid& grid, int brownian_dim, int jump_channels,
                      const IntensityFn& intensity_fn, const LatticeOptions& options) {
  RBSDE_REQUIRE(brownian_dim >= 0 && jump_channels >= 0, ErrorCode::InvalidArgument,
                "dimensions must be nonnegative");
  RBSDE_REQUIRE(brownian_dim + jump_channels >= 1 || options.single_path,
                ErrorCode::DegenerateLattice,
                "p = d = 0 requires the single-path flag");
  RBSDE_REQUIRE(brownian_dim <= 16, ErrorCode::LatticeTooLarge, "Brownian dimension too large");

  Lattice lat;
  lat.grid_ = grid;
  lat.p_ = brownian_dim;
  lat.d_ = jump_channels;
  lat.branching_ = (1 << brownian_dim) * (jump_channels + 1);
  lat.sqrt_dt_ = std::sqrt(grid.dt());

  const int K = grid.steps;
  const auto C = static_cast<std::size_t>(lat.branching_);
  std::size_t total = 0;
  std::size_t size = 1;
  for (int k = 0; k <= K; ++k) {
    lat.level_sizes_.push_back(size);
    total += size;
    RBSDE_REQUIRE(total <= options.max_nodes, ErrorCode::LatticeTooLarge,
                  "tree exceeds the node budget; reduce steps or dimensions");
    if (k < K) {
      RBSDE_REQUIRE(size <= std::numeric_limits<std::size_t>::max() / C,
                    ErrorCode::LatticeTooLarge, "node index overflow");
      size *= C;
    }
  }

  const auto p = static_cast<std::size_t>(brownian_dim);
  const auto d = static_cast<std::size_t>(jump_channels);
  const double dt = grid.dt();
  const double brownian_weight = 1.0 / static_cast<double>(1 << brownian_dim);

  lat.probs_.resize(static_cast<std::size_t>(K) + 1);
  lat.intensities_.resize(static_cast<std::size_t>(K));
  lat.w_.resize(static_cast<std::size_t>(K) + 1);
  lat.jumps_.resize(static_cast<std::size_t>(K) + 1);
  lat.probs_[0].assign(1, 1.0);
  lat.w_[0].assign(p, 0.0);
  lat.jumps_[0].assign(d, 0);

  std::vector<double> first_rates;
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const std::size_t n_nodes = lat.level_sizes_[lk];
    auto& rates = lat.intensities_[lk];
    rates.resize(n_nodes * d);

    // The callback is user code; evaluate it serially.
    for (std::size_t n = 0; n < n_nodes; ++n) {
      const auto lambda = intensity_fn ? intensity_fn(lat.state(k, n)) : std::vector<double>{};
      RBSDE_REQUIRE(lambda.size() == d, ErrorCode::InvalidArgument,
                    "intensity function returned the wrong number of channels");
      double total_rate = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        RBSDE_REQUIRE(lambda[i] > 0.0 && std::isfinite(lambda[i]), ErrorCode::InvalidArgument,
                      "intensities must be positive and finite");
        rates[n * d + i] = lambda[i];
        total_rate += lambda[i];
      }
      RBSDE_REQUIRE(total_rate * dt < 1.0, ErrorCode::IntensityTooLarge,
                    "sum of intensities times dt must stay below 1 (one jump per step)");
      if (k == 0 && n == 0) {
        first_rates = lambda;
      } else if (lambda != first_rates) {
        lat.deterministic_intensity_ = false;
      }
    }

    const std::size_t n_child = lat.level_sizes_[lk + 1];
    auto& probs = lat.probs_[lk + 1];
    auto& w = lat.w_[lk + 1];
    auto& jumps = lat.jumps_[lk + 1];
    probs.resize(n_child);
    w.resize(n_child * p);
    jumps.resize(n_child * d);
    const auto& w_parent = lat.w_[lk];
    const auto& jumps_parent = lat.jumps_[lk];

    parallel_for(n_nodes, [&](std::size_t n) {
      double no_jump = 1.0;
      for (std::size_t i = 0; i < d; ++i) no_jump -= rates[n * d + i] * dt;
      for (std::size_t s = 0; s < C; ++s) {
        const std::size_t c = n * C + s;
        const int slot = static_cast<int>(s);
        const int j = lat.jump_outcome(slot);
        const double pi = j == 0 ? no_jump : rates[n * d + static_cast<std::size_t>(j - 1)] * dt;
        probs[c] = brownian_weight * pi;
        for (std::size_t m = 0; m < p; ++m)
          w[c * p + m] = w_parent[n * p + m] + lat.brownian_increment(slot, static_cast<int>(m));
        for (std::size_t i = 0; i < d; ++i)
          jumps[c * d + i] = jumps_parent[n * d + i] + (j == static_cast<int>(i) + 1 ? 1 : 0);
      }
    });
  }
  return lat;
}

NodeValues zero_values(const Lattice& lattice) {
  NodeValues v(static_cast<std::size_t>(lattice.steps()) + 1);
  for (int k = 0; k <= lattice.steps(); ++k)
    v[static_cast<std::size_t>(k)].assign(lattice.level_size(k), 0.0);
  return v;
}

AdaptedProcess adapted_from_fn(const NodeFn& f, const Lattice& lattice) {
  AdaptedProcess proc{zero_values(lattice), ProcessKind::Adapted};
  for (int k = 0; k <= lattice.steps(); ++k)
    for (std::size_t n = 0; n < lattice.level_size(k); ++n)
      proc.slice(k)[n] = f(lattice.state(k, n));
  return proc;
}

AdaptedProcess constant_process(double value, const Lattice& lattice) {
  AdaptedProcess proc{zero_values(lattice), ProcessKind::Adapted};
  for (auto& s : proc.values) std::fill(s.begin(), s.end(), value);
  return proc;
}

AdaptedProcess terminal_from_fn(const NodeFn& f, const Lattice& lattice) {
  AdaptedProcess proc;
  proc.kind = ProcessKind::TerminalOnly;
  proc.values.resize(static_cast<std::size_t>(lattice.steps()) + 1);
  const int K = lattice.steps();
  auto& last = proc.values.back();
  last.resize(lattice.leaf_count());
  for (std::size_t n = 0; n < last.size(); ++n) last[n] = f(lattice.state(K, n));
  return proc;
}

const std::vector<double>& leaves(const AdaptedProcess& process) { return process.values.back(); }

DiscountSpec discount_process(const AdaptedProcess& rate, const Lattice& lattice,
                              bool allow_zero) {
  const int K = lattice.steps();
  RBSDE_REQUIRE(rate.values.size() == static_cast<std::size_t>(K) + 1,
                ErrorCode::LatticeMismatch, "discount rate has the wrong number of slices");
  DiscountSpec spec;
  spec.rate = rate;
  spec.zero_mode = allow_zero;
  spec.factor = zero_values(lattice);
  spec.factor[0][0] = 1.0;

  bool all_zero = true;
  for (int k = 0; k < K; ++k) {
    const auto& r = rate.slice(k);
    RBSDE_REQUIRE(r.size() == lattice.level_size(k), ErrorCode::LatticeMismatch,
                  "discount rate slice size mismatch");
    for (double v : r) {
      RBSDE_REQUIRE(v >= 0.0 && std::isfinite(v), ErrorCode::NegativeRate,
                    "discount rate must be nonnegative and finite");
      RBSDE_REQUIRE(v > 0.0 || allow_zero, ErrorCode::ZeroRateWithoutFlag,
                    "a zero discount rate needs the explicit zero-discount mode");
      if (v != 0.0) all_zero = false;
      if (v != r.front()) spec.deterministic = false;
    }
  }
  if (all_zero) spec.zero_mode = true;

  const double dt = lattice.dt();
  const auto C = static_cast<std::size_t>(lattice.branching());
  for (int k = 0; k < K; ++k) {
    const auto& parent_factor = spec.factor[static_cast<std::size_t>(k)];
    auto& child_factor = spec.factor[static_cast<std::size_t>(k) + 1];
    const auto& r = rate.slice(k);
    parallel_for(lattice.level_size(k), [&](std::size_t n) {
      const double step = std::exp(-r[n] * dt);
      for (std::size_t s = 0; s < C; ++s) child_factor[n * C + s] = parent_factor[n] * step;
    });
  }
  return spec;
}

DiscountSpec zero_discount(const Lattice& lattice) {
  return discount_process(constant_process(0.0, lattice), lattice, true);
}

DiscountSpec constant_discount(double rate, const Lattice& lattice) {
  return discount_process(constant_process(rate, lattice), lattice, rate == 0.0);
}

}  // namespace rbsde
