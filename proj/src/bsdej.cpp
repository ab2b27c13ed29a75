#include "rbsde/bsdej.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbsde/error.hpp"
#include "rbsde/kernels.hpp"

namespace rbsde {

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::Dp ? "dp" : "recursion";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "dp") return Scheme::Dp;
  if (text == "recursion") return Scheme::Recursion;
  throw Error(ErrorCode::ConfigError, "unknown scheme '" + std::string(text) + "' (dp | recursion)");
}

double step_discount(Scheme scheme, double rate_dt) {
  return scheme == Scheme::Dp ? std::exp(-rate_dt) : 1.0 / (1.0 + rate_dt);
}

double one_step_entropic(std::span<const double> child_values, std::span<const double> probs,
                         double cost_dt, double rate_dt, Scheme scheme) {
  RBSDE_REQUIRE(child_values.size() == probs.size(), ErrorCode::InvalidArgument,
                "values and probabilities differ in length");
  RBSDE_REQUIRE(1.0 + rate_dt > 0.0, ErrorCode::InvalidArgument, "1 + delta dt must be positive");
  if (scheme == Scheme::Recursion)
    return (cost_dt - log_mean_exp_neg(child_values, probs)) / (1.0 + rate_dt);
  return cost_dt - log_mean_exp_neg(child_values, probs, std::exp(-rate_dt));
}

double BsdeSolution::z(const Lattice& lattice, int k, std::size_t node, int m) const {
  return brownian[static_cast<std::size_t>(k)]
                 [node * static_cast<std::size_t>(lattice.brownian_dim()) + static_cast<std::size_t>(m)];
}

double BsdeSolution::y_jump(const Lattice& lattice, int k, std::size_t node, int i) const {
  return jump[static_cast<std::size_t>(k)]
             [node * static_cast<std::size_t>(lattice.jump_channels()) + static_cast<std::size_t>(i)];
}

namespace {

void check_inputs(const Lattice& lattice, const AdaptedProcess& cost,
                  const std::vector<double>& terminal, const DiscountSpec& discount) {
  const auto levels = static_cast<std::size_t>(lattice.steps()) + 1;
  RBSDE_REQUIRE(terminal.size() == lattice.leaf_count(), ErrorCode::LatticeMismatch,
                "terminal values do not match the leaves");
  RBSDE_REQUIRE(cost.values.size() == levels && discount.factor.size() == levels &&
                    discount.rate.values.size() == levels,
                ErrorCode::LatticeMismatch, "process slices do not match the lattice");
  for (int k = 0; k < lattice.steps(); ++k) {
    RBSDE_REQUIRE(cost.slice(k).size() == lattice.level_size(k) &&
                      discount.rate.slice(k).size() == lattice.level_size(k),
                  ErrorCode::LatticeMismatch, "process slice size mismatch");
  }
}

}  // namespace

BsdeSolution solve_bsdej(const Lattice& lattice, const AdaptedProcess& cost,
                         const std::vector<double>& terminal, const DiscountSpec& discount,
                         Scheme scheme) {
  check_inputs(lattice, cost, terminal, discount);
  const int K = lattice.steps();
  const int p = lattice.brownian_dim();
  const int d = lattice.jump_channels();
  const auto C = static_cast<std::size_t>(lattice.branching());
  const auto patterns = static_cast<std::size_t>(lattice.brownian_patterns());
  const double dt = lattice.dt();
  const double two_sqdt = 2.0 * lattice.sqrt_dt();

  BsdeSolution sol;
  sol.scheme = scheme;
  sol.cost = cost;
  sol.discount = discount;
  sol.value.resize(static_cast<std::size_t>(K) + 1);
  sol.value.back() = terminal;
  sol.brownian.resize(static_cast<std::size_t>(K));
  sol.jump.resize(static_cast<std::size_t>(K));
  NodeValues q(static_cast<std::size_t>(K) + 1);
  q[0].assign(1, 1.0);

  for (int k = K - 1; k >= 0; --k) {
    const auto lk = static_cast<std::size_t>(k);
    const std::size_t n_nodes = lattice.level_size(k);
    const auto& next = sol.value[lk + 1];
    auto& here = sol.value[lk];
    auto& z = sol.brownian[lk];
    auto& yj = sol.jump[lk];
    auto& qrow = q[lk + 1];
    here.resize(n_nodes);
    z.resize(n_nodes * static_cast<std::size_t>(p));
    yj.resize(n_nodes * static_cast<std::size_t>(d));
    qrow.resize(next.size());
    const auto& u = cost.slice(k);
    const auto& r = discount.rate.slice(k);

    parallel_for(n_nodes, [&](std::size_t n) {
      const std::span<const double> v(next.data() + n * C, C);
      const auto probs = lattice.child_probs(k, n);
      here[n] = one_step_entropic(v, probs, u[n] * dt, r[n] * dt, scheme);

      // q* proportional to p exp(-x), x the discounted child value.
      const double scale = scheme == Scheme::Dp ? std::exp(-r[n] * dt) : 1.0;
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < C; ++s) lo = std::min(lo, scale * v[s]);
      double total = 0.0;
      for (std::size_t s = 0; s < C; ++s) {
        const double w = probs[s] * std::exp(-(scale * v[s] - lo));
        qrow[n * C + s] = w;
        total += w;
      }
      for (std::size_t s = 0; s < C; ++s) qrow[n * C + s] /= total;

      // Z_m: averaged finite difference over no-jump children split by b_m.
      for (int m = 0; m < p; ++m) {
        double up = 0.0;
        double down = 0.0;
        for (std::size_t b = 0; b < patterns; ++b) {
          if ((b >> m) & 1U) up += v[b];
          else down += v[b];
        }
        const double half = static_cast<double>(patterns) / 2.0;
        z[n * static_cast<std::size_t>(p) + static_cast<std::size_t>(m)] =
            (up / half - down / half) / two_sqdt;
      }
      // y^i: mean over Brownian patterns of jump-i children minus no-jump mean.
      double base = 0.0;
      for (std::size_t b = 0; b < patterns; ++b) base += v[b];
      base /= static_cast<double>(patterns);
      for (int i = 0; i < d; ++i) {
        double mean = 0.0;
        const std::size_t offset = static_cast<std::size_t>(i + 1) * patterns;
        for (std::size_t b = 0; b < patterns; ++b) mean += v[offset + b];
        mean /= static_cast<double>(patterns);
        yj[n * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = mean - base;
      }
    });
  }
  sol.qstar = NodeMeasure(lattice, std::move(q));
  return sol;
}

AdaptedProcess closed_form_delta0(const Lattice& lattice, const AdaptedProcess& cost,
                                  const std::vector<double>& terminal) {
  const int K = lattice.steps();
  const double dt = lattice.dt();
  RBSDE_REQUIRE(terminal.size() == lattice.leaf_count(), ErrorCode::LatticeMismatch,
                "terminal values do not match the leaves");

  // Accumulated cost C_k along the path, so that the pathwise exponent is
  // A = U_T + C_K and Y_k = -C_k - ln E[exp(-A) | node].
  NodeValues accumulated = zero_values(lattice);
  const auto C = static_cast<std::size_t>(lattice.branching());
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    for (std::size_t n = 0; n < lattice.level_size(k); ++n)
      for (std::size_t s = 0; s < C; ++s)
        accumulated[lk + 1][n * C + s] = accumulated[lk][n] + cost.at(k, n) * dt;
  }
  std::vector<double> exponent(terminal.size());
  for (std::size_t n = 0; n < terminal.size(); ++n)
    exponent[n] = terminal[n] + accumulated.back()[n];
  const double shift = *std::min_element(exponent.begin(), exponent.end());

  std::vector<double> weight(terminal.size());
  for (std::size_t n = 0; n < weight.size(); ++n) weight[n] = std::exp(-(exponent[n] - shift));
  const auto mean = kernels::backward_accumulate(lattice, lattice.transitions(), weight,
                                                 [](int, std::size_t) { return 0.0; });

  AdaptedProcess y{zero_values(lattice), ProcessKind::Adapted};
  for (int k = 0; k <= K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    for (std::size_t n = 0; n < lattice.level_size(k); ++n)
      y.values[lk][n] = shift - accumulated[lk][n] - std::log(mean[lk][n]);
  }
  return y;
}

const NodeMeasure& extract_optimal_measure(const BsdeSolution& sol) { return sol.qstar; }

ImpliedTilt implied_tilt(const BsdeSolution& sol, const Lattice& lattice, int k,
                         std::size_t node) {
  RBSDE_REQUIRE(k >= 0 && k < lattice.steps(), ErrorCode::InvalidArgument,
                "implied tilt needs an interior node");
  const int p = lattice.brownian_dim();
  const int d = lattice.jump_channels();
  const auto q = sol.qstar.child_probs(lattice, k, node);
  ImpliedTilt tilt;
  tilt.drift.assign(static_cast<std::size_t>(p), 0.0);
  tilt.intensity_ratio.assign(static_cast<std::size_t>(d), 0.0);
  for (int s = 0; s < lattice.branching(); ++s) {
    const double w = q[static_cast<std::size_t>(s)];
    for (int m = 0; m < p; ++m)
      tilt.drift[static_cast<std::size_t>(m)] += w * lattice.brownian_increment(s, m);
    const int j = lattice.jump_outcome(s);
    if (j > 0) tilt.intensity_ratio[static_cast<std::size_t>(j - 1)] += w;
  }
  for (auto& v : tilt.drift) v /= lattice.dt();
  for (int i = 0; i < d; ++i)
    tilt.intensity_ratio[static_cast<std::size_t>(i)] /= lattice.intensity(k, node, i) * lattice.dt();
  return tilt;
}

namespace {

// Backward pass from slice `to`: M_to = Y_to,
// M_j = -(delta_j Y_j - U_j) dt - ln E[exp(-M_{j+1}) | node]; the recursion
// says M_j = Y_j. Returns the worst |Y_j - M_j| for every j < to.
std::vector<double> recursion_residuals(const Lattice& lattice, const BsdeSolution& sol, int to) {
  const double dt = lattice.dt();
  const auto C = static_cast<std::size_t>(lattice.branching());
  std::vector<double> worst(static_cast<std::size_t>(to), 0.0);
  std::vector<double> next = sol.value[static_cast<std::size_t>(to)];
  for (int j = to - 1; j >= 0; --j) {
    const auto lj = static_cast<std::size_t>(j);
    const auto& y = sol.value[lj];
    const auto& u = sol.cost.slice(j);
    const auto& r = sol.discount.rate.slice(j);
    std::vector<double> here(lattice.level_size(j));
    std::vector<double> residual(here.size());
    parallel_for(here.size(), [&](std::size_t n) {
      const std::span<const double> v(next.data() + n * C, C);
      here[n] = -(r[n] * y[n] - u[n]) * dt - log_mean_exp_neg(v, lattice.child_probs(j, n));
      residual[n] = std::abs(y[n] - here[n]);
    });
    worst[lj] = *std::max_element(residual.begin(), residual.end());
    next = std::move(here);
  }
  return worst;
}

}  // namespace

double verify_recursion(const Lattice& lattice, const BsdeSolution& sol, int from, int to) {
  RBSDE_REQUIRE(0 <= from && from <= to && to <= lattice.steps(), ErrorCode::InvalidArgument,
                "need 0 <= from <= to <= K");
  if (from == to) return 0.0;
  return recursion_residuals(lattice, sol, to)[static_cast<std::size_t>(from)];
}

double verify_recursion_all(const Lattice& lattice, const BsdeSolution& sol) {
  double worst = 0.0;
  for (int to = 1; to <= lattice.steps(); ++to)
    for (double r : recursion_residuals(lattice, sol, to)) worst = std::max(worst, r);
  return worst;
}

KDiagnostic k_diagnostic(const Lattice& lattice, const BsdeSolution& sol) {
  const int K = lattice.steps();
  const double dt = lattice.dt();
  const auto C = static_cast<std::size_t>(lattice.branching());
  KDiagnostic diag;
  diag.log_k.resize(static_cast<std::size_t>(K) + 1);
  diag.log_k[0].assign(1, -sol.y0());
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& y = sol.value[lk];
    const auto& yn = sol.value[lk + 1];
    const auto& u = sol.cost.slice(k);
    const auto& r = sol.discount.rate.slice(k);
    const auto& parent = diag.log_k[lk];
    auto& child = diag.log_k[lk + 1];
    child.resize(lattice.level_size(k + 1));
    parallel_for(lattice.level_size(k), [&](std::size_t n) {
      // ln K_{k+1} - ln K_k + Y_{k+1} = Y_k + (delta Y_k - U_k) dt.
      const double carry = parent[n] + y[n] + (r[n] * y[n] - u[n]) * dt;
      for (std::size_t s = 0; s < C; ++s) child[n * C + s] = carry - yn[n * C + s];
    });
  }
  return diag;
}

double verify_k_martingale(const Lattice& lattice, const BsdeSolution& sol) {
  RBSDE_REQUIRE(sol.scheme == Scheme::Recursion, ErrorCode::SchemeMismatch,
                "the K process is a martingale only under the recursion scheme");
  const int K = lattice.steps();
  const double dt = lattice.dt();
  const auto C = static_cast<std::size_t>(lattice.branching());
  double worst = 0.0;
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& y = sol.value[lk];
    const auto& yn = sol.value[lk + 1];
    const auto& u = sol.cost.slice(k);
    const auto& r = sol.discount.rate.slice(k);
    std::vector<double> residual(lattice.level_size(k));
    parallel_for(residual.size(), [&](std::size_t n) {
      const std::span<const double> v(yn.data() + n * C, C);
      const double log_ratio =
          y[n] + (r[n] * y[n] - u[n]) * dt + log_mean_exp_neg(v, lattice.child_probs(k, n));
      residual[n] = std::abs(std::expm1(log_ratio));
    });
    worst = std::max(worst, *std::max_element(residual.begin(), residual.end()));
  }
  return worst;
}

namespace {

// E^{q}[sum_{j>=k} prod(step discounts) running_j dt + ... terminal | node].
NodeValues discounted_backward(const Lattice& lattice, const NodeMeasure& q,
                               const DiscountSpec& discount, Scheme scheme,
                               const NodeValues& running, const std::vector<double>& terminal) {
  const int K = lattice.steps();
  const double dt = lattice.dt();
  const auto C = static_cast<std::size_t>(lattice.branching());
  NodeValues acc(static_cast<std::size_t>(K) + 1);
  acc.back() = terminal;
  for (int k = K - 1; k >= 0; --k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& next = acc[lk + 1];
    auto& here = acc[lk];
    here.resize(lattice.level_size(k));
    const auto& r = discount.rate.slice(k);
    const auto& run = running[lk];
    parallel_for(here.size(), [&](std::size_t n) {
      const auto w = q.child_probs(lattice, k, n);
      double mean = 0.0;
      for (std::size_t s = 0; s < C; ++s) mean += w[s] * next[n * C + s];
      here[n] = run[n] * dt + step_discount(scheme, r[n] * dt) * mean;
    });
  }
  return acc;
}

}  // namespace

ComparisonReport comparison_check(const BsdeSolution& sol1, const BsdeSolution& sol2,
                                  const Lattice& lattice, double tolerance) {
  const int K = lattice.steps();
  for (int k = 0; k < K; ++k) {
    const auto& u1 = sol1.cost.slice(k);
    const auto& u2 = sol2.cost.slice(k);
    for (std::size_t n = 0; n < u1.size(); ++n)
      RBSDE_REQUIRE(u1[n] <= u2[n], ErrorCode::InputsNotOrdered, "cost inputs are not ordered");
  }
  const auto& t1 = sol1.terminal();
  const auto& t2 = sol2.terminal();
  for (std::size_t n = 0; n < t1.size(); ++n)
    RBSDE_REQUIRE(t1[n] <= t2[n], ErrorCode::InputsNotOrdered, "terminal inputs are not ordered");

  ComparisonReport report;
  report.max_order_violation = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= K; ++k) {
    const auto& y1 = sol1.value[static_cast<std::size_t>(k)];
    const auto& y2 = sol2.value[static_cast<std::size_t>(k)];
    for (std::size_t n = 0; n < y1.size(); ++n)
      report.max_order_violation = std::max(report.max_order_violation, y1[n] - y2[n]);
  }
  report.order_holds = report.max_order_violation <= tolerance;

  // Right-hand side of the comparison bound: the discounted Q*,2 expectation
  // of the input differences, discounted per step as in sol2's scheme.
  NodeValues running = zero_values(lattice);
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    for (std::size_t n = 0; n < running[lk].size(); ++n)
      running[lk][n] = sol1.cost.at(k, n) - sol2.cost.at(k, n);
  }
  std::vector<double> terminal(t1.size());
  for (std::size_t n = 0; n < terminal.size(); ++n) terminal[n] = t1[n] - t2[n];
  const auto bound =
      discounted_backward(lattice, sol2.qstar, sol2.discount, sol2.scheme, running, terminal);

  report.bound_gap = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    for (std::size_t n = 0; n < bound[lk].size(); ++n) {
      const double s = sol2.discount.factor_at(k, n);
      const double lhs = s * (sol1.value[lk][n] - sol2.value[lk][n]);
      report.bound_gap = std::max(report.bound_gap, lhs - s * bound[lk][n]);
    }
  }
  return report;
}

AprioriSides apriori_estimate(const BsdeSolution& sol1, const BsdeSolution& sol2,
                              const Lattice& lattice) {
  const int K = lattice.steps();
  const double dt = lattice.dt();
  const auto C = static_cast<std::size_t>(lattice.branching());
  // Pathwise running sup of |Y12|^2 and running sum of |U12|^2 dt.
  NodeValues sup_sq = zero_values(lattice);
  NodeValues cost_sq = zero_values(lattice);
  sup_sq[0][0] = std::pow(sol1.y0() - sol2.y0(), 2);
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    for (std::size_t n = 0; n < lattice.level_size(k); ++n) {
      const double du = sol1.cost.at(k, n) - sol2.cost.at(k, n);
      for (std::size_t s = 0; s < C; ++s) {
        const std::size_t c = n * C + s;
        const double dy = sol1.value[lk + 1][c] - sol2.value[lk + 1][c];
        sup_sq[lk + 1][c] = std::max(sup_sq[lk][n], dy * dy);
        cost_sq[lk + 1][c] = cost_sq[lk][n] + du * du * dt;
      }
    }
  }
  const auto path = sol2.qstar.path_probabilities(lattice);
  AprioriSides sides;
  const auto& leaf_prob = path.back();
  for (std::size_t n = 0; n < leaf_prob.size(); ++n) {
    const double dterm = sol1.terminal()[n] - sol2.terminal()[n];
    sides.lhs += leaf_prob[n] * sup_sq.back()[n];
    sides.rhs += leaf_prob[n] * (dterm * dterm + cost_sq.back()[n]);
  }
  return sides;
}

NodeValues gateaux_derivative(const BsdeSolution& sol1, const Plan& plan1, const Plan& plan2,
                              const UtilitySpec& utilities, const Lattice& lattice) {
  const int K = lattice.steps();
  int sign = 0;
  auto note = [&sign](double diff) {
    if (diff == 0.0) return true;
    const int s = diff > 0.0 ? 1 : -1;
    if (sign == 0) sign = s;
    return sign == s;
  };
  NodeValues running = zero_values(lattice);
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& c1 = plan1.consumption.slice(k);
    const auto& c2 = plan2.consumption.slice(k);
    for (std::size_t n = 0; n < c1.size(); ++n) {
      RBSDE_REQUIRE(note(c2[n] - c1[n]), ErrorCode::NotComparable,
                    "plans are not comparable (neither dominates the other)");
      running[lk][n] = utilities.running.marginal(c1[n]) * (c2[n] - c1[n]);
    }
  }
  std::vector<double> terminal(lattice.leaf_count(), 0.0);
  if (!utilities.consumption_only()) {
    for (std::size_t n = 0; n < terminal.size(); ++n) {
      const double diff = plan2.terminal[n] - plan1.terminal[n];
      RBSDE_REQUIRE(note(diff), ErrorCode::NotComparable,
                    "plans are not comparable (neither dominates the other)");
      terminal[n] = utilities.terminal.marginal(plan1.terminal[n]) * diff;
    }
  }
  return discounted_backward(lattice, sol1.qstar, sol1.discount, sol1.scheme, running, terminal);
}

}  // namespace rbsde
