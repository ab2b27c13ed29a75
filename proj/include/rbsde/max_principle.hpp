#pragma once

// Outer maximization over consumption/terminal plans: budget under the
// pricing measure, the candidate plan from inverse marginal utilities, the
// damped plan <-> BSDE fixed point and the root-find for the multiplier nu.

#include <vector>

#include "rbsde/bsdej.hpp"
#include "rbsde/error.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/measure.hpp"
#include "rbsde/utility.hpp"

namespace rbsde {

struct BudgetProblem {
  double capital = 1.0;
  NodeMeasure pricing;
  DiscountSpec discount;
  UtilitySpec utilities;
  Scheme scheme = Scheme::Dp;
};

/// X_0 = E^{P~}[sum_k c_k dt + psi].
double budget(const Plan& plan, const BudgetProblem& problem, const Lattice& lattice);

/// V_0 of a plan: the BSDE value with inputs (U(c), U_T(psi)).
BsdeSolution plan_value(const Plan& plan, const BudgetProblem& problem, const Lattice& lattice);

/// c_k = I(nu Z~_k / (S_k Z*_k)), psi = I_T(nu Z~_T / (S_T Z*_T)); psi = 0 in
/// consumption-only mode. `zstar` supplies the density Z*.
Plan candidate_plan(double nu, const NodeMeasure& zstar, const BudgetProblem& problem,
                    const Lattice& lattice);

/// c = x/T and psi = x, rescaled to meet the budget exactly.
Plan initial_plan(const BudgetProblem& problem, const Lattice& lattice);

struct FixedPointOptions {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 500;
};

struct FixedPointResult {
  Plan plan;
  BsdeSolution solution;  // solved at `plan`
  int iterations = 0;
  double change = 0.0;  // last sup relative change
};

/// Raised when the damped iteration stalls; carries the last iterate.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, FixedPointResult last)
      : Error(ErrorCode::NoConvergence, what), last_(std::move(last)) {}
  const FixedPointResult& last() const { return last_; }

 private:
  FixedPointResult last_;
};

/// Alternates BSDE solve -> candidate plan -> damped update from `start`
/// (initial_plan when null) until the sup relative change is <= tol.
FixedPointResult solve_fixed_point(double nu, const BudgetProblem& problem, const Lattice& lattice,
                                   const FixedPointOptions& options = {},
                                   const Plan* start = nullptr);

struct NuSolution {
  double nu = 0.0;
  double budget = 0.0;
  FixedPointResult fixed_point;
  int evaluations = 0;
  /// Every (nu, f(nu)) evaluated, sorted by nu.
  std::vector<std::pair<double, double>> trace;
};

/// Finds nu with |f(nu) - x| <= tol, f(nu) = budget of the fixed-point plan,
/// by doubling/halving from nu = 1 and bisection in ln nu.
NuSolution solve_nu(const BudgetProblem& problem, const Lattice& lattice, double tol = 1e-8,
                    const FixedPointOptions& options = {});

struct StationarityResidual {
  double running = 0.0;
  double terminal = 0.0;
  double max() const { return running > terminal ? running : terminal; }
};

/// max |U'(c) S Z* / (nu Z~) - 1| and its terminal analogue.
StationarityResidual verify_stationarity(const Plan& plan, const BsdeSolution& sol, double nu,
                                         const BudgetProblem& problem, const Lattice& lattice);

/// L = V_0 + nu (x - X_0).
double lagrangian(const Plan& plan, const BudgetProblem& problem, double nu,
                  const Lattice& lattice);

struct ValuePoint {
  double capital = 0.0;
  double nu = 0.0;
  double value = 0.0;
};

/// u(x) on a capital grid.
std::vector<ValuePoint> value_curve(const BudgetProblem& problem, const Lattice& lattice,
                                    const std::vector<double>& capitals, double tol = 1e-8,
                                    const FixedPointOptions& options = {});

}  // namespace rbsde
