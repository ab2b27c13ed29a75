#pragma once

// Backward induction for the entropic BSDE with jumps on a lattice.
//
// Two one-step operators are provided. Both solve the per-node problem
// min_q { q . x + KL(q || p) } = -ln sum p exp(-x) and differ only in how the
// discount enters:
//   Recursion:  Y_k = (U_k dt - ln E[exp(-Y_{k+1})]) / (1 + delta_k dt)
//               makes the exponential recursion exact at finite dt.
//   Dp:         Y_k = U_k dt - ln E[exp(-exp(-delta_k dt) Y_{k+1})]
//               is the dynamic program of the discrete penalized criterion
//               with the stepwise KL penalty, so Y_0 equals its minimum.

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/measure.hpp"
#include "rbsde/utility.hpp"

namespace rbsde {

enum class Scheme { Dp, Recursion };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

/// g(x) = exp(-x) + x - 1.
inline double entropic_driver(double x) { return std::expm1(-x) + x; }

double one_step_entropic(std::span<const double> child_values, std::span<const double> probs,
                         double cost_dt, double rate_dt, Scheme scheme);

struct BsdeSolution {
  Scheme scheme = Scheme::Dp;
  NodeValues value;  // Y on slices 0..K
  // Brownian integrand Z, p entries per node, slices 0..K-1.
  NodeValues brownian;
  // Jump sizes y^i, d entries per node, slices 0..K-1.
  NodeValues jump;
  NodeMeasure qstar;
  AdaptedProcess cost;
  DiscountSpec discount;

  double y0() const { return value[0][0]; }
  double z(const Lattice& lattice, int k, std::size_t node, int m) const;
  double y_jump(const Lattice& lattice, int k, std::size_t node, int i) const;
  const std::vector<double>& terminal() const { return value.back(); }
};

BsdeSolution solve_bsdej(const Lattice& lattice, const AdaptedProcess& cost,
                         const std::vector<double>& terminal, const DiscountSpec& discount,
                         Scheme scheme = Scheme::Dp);

/// Y_k = -ln E[exp(-U_T - sum_{j>=k} U_j dt) | node] for zero discount,
/// through plain conditional expectations of exponentials.
AdaptedProcess closed_form_delta0(const Lattice& lattice, const AdaptedProcess& cost,
                                  const std::vector<double>& terminal);

const NodeMeasure& extract_optimal_measure(const BsdeSolution& sol);

struct ImpliedTilt {
  std::vector<double> drift;            // E^{q*}[dW_m] / dt
  std::vector<double> intensity_ratio;  // q*(jump i) / (lambda_i dt)
};

ImpliedTilt implied_tilt(const BsdeSolution& sol, const Lattice& lattice, int k,
                         std::size_t node);

/// max over nodes of slice `from` of
/// |Y_from + ln E[exp(-Y_to + sum_{from<=j<to} (delta_j Y_j - U_j) dt) | node]|.
double verify_recursion(const Lattice& lattice, const BsdeSolution& sol, int from, int to);
/// The same residual maximized over every pair from < to.
double verify_recursion_all(const Lattice& lattice, const BsdeSolution& sol);

/// ln K_k = -Y_k + sum_{j<k} (delta_j Y_j - U_j) dt.
struct KDiagnostic {
  NodeValues log_k;
};

KDiagnostic k_diagnostic(const Lattice& lattice, const BsdeSolution& sol);
/// max |E[K_{k+1} | node] - K_k| / K_k; recursion scheme only.
double verify_k_martingale(const Lattice& lattice, const BsdeSolution& sol);

struct ComparisonReport {
  bool order_holds = true;
  double max_order_violation = 0.0;  // max (Y1 - Y2), <= 0 when ordered
  double bound_gap = 0.0;            // max of S_k Y12_k - E^{Q*,2}[...]
};

/// Requires (U1, U_T1) <= (U2, U_T2) nodewise; checks Y1 <= Y2 and the
/// comparison bound weighted by the second solution's optimal measure.
ComparisonReport comparison_check(const BsdeSolution& sol1, const BsdeSolution& sol2,
                                  const Lattice& lattice, double tolerance = 1e-12);

/// A priori estimate sides: E^{Q*,2}[sup_k |Y12_k|^2] and
/// E^{Q*,2}[|U_T12|^2 + sum_k |U12_k|^2 dt].
struct AprioriSides {
  double lhs = 0.0;
  double rhs = 0.0;
};
AprioriSides apriori_estimate(const BsdeSolution& sol1, const BsdeSolution& sol2,
                              const Lattice& lattice);

/// Directional derivative of V at plan1 toward plan2 (sol1 solved for
/// (U(c1), U_T(psi1))), as a Q*,1 expectation of discounted marginal
/// utility increments. The per-step discount follows the solution's scheme.
NodeValues gateaux_derivative(const BsdeSolution& sol1, const Plan& plan1, const Plan& plan2,
                              const UtilitySpec& utilities, const Lattice& lattice);

/// Per-step discount factor matching the scheme: exp(-delta dt) for Dp and
/// 1 / (1 + delta dt) for Recursion.
double step_discount(Scheme scheme, double rate_dt);

}  // namespace rbsde
