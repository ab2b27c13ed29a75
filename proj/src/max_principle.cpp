#include "rbsde/max_principle.hpp"

#include <algorithm>
#include <cmath>

#include "rbsde/parallel.hpp"

namespace rbsde {

double budget(const Plan& plan, const BudgetProblem& problem, const Lattice& lattice) {
  std::vector<double> terminal = problem.utilities.consumption_only()
                                     ? std::vector<double>(lattice.leaf_count(), 0.0)
                                     : plan.terminal;
  return expectation(problem.pricing, lattice, &plan.consumption.values, terminal);
}

BsdeSolution plan_value(const Plan& plan, const BudgetProblem& problem, const Lattice& lattice) {
  return solve_bsdej(lattice, running_utility(plan, problem.utilities, lattice),
                     terminal_utility(plan, problem.utilities), problem.discount, problem.scheme);
}

namespace {

// nu Z~ / (S Z*) at one node.
double marginal_target(double nu, const NodeMeasure& zstar, const BudgetProblem& problem, int k,
                       std::size_t n) {
  return nu * problem.pricing.density(k, n) /
         (problem.discount.factor_at(k, n) * zstar.density(k, n));
}

}  // namespace

Plan candidate_plan(double nu, const NodeMeasure& zstar, const BudgetProblem& problem,
                    const Lattice& lattice) {
  RBSDE_REQUIRE(nu > 0.0, ErrorCode::NonpositiveNu, "multiplier nu must be > 0");
  RBSDE_REQUIRE(!problem.utilities.running.is_none(), ErrorCode::InvalidArgument,
                "running utility cannot be `none`");
  const int K = lattice.steps();
  Plan plan{AdaptedProcess{zero_values(lattice), ProcessKind::Adapted},
            std::vector<double>(lattice.leaf_count(), 0.0)};
  // Slice K is filled too: it is c* at the horizon, used by the log case.
  for (int k = 0; k <= K; ++k) {
    auto& c = plan.consumption.slice(k);
    parallel_for(c.size(), [&](std::size_t n) {
      c[n] = problem.utilities.running.inverse_marginal(marginal_target(nu, zstar, problem, k, n));
    });
  }
  if (!problem.utilities.consumption_only()) {
    parallel_for(plan.terminal.size(), [&](std::size_t n) {
      plan.terminal[n] =
          problem.utilities.terminal.inverse_marginal(marginal_target(nu, zstar, problem, K, n));
    });
  }
  return plan;
}

Plan initial_plan(const BudgetProblem& problem, const Lattice& lattice) {
  RBSDE_REQUIRE(problem.capital > 0.0, ErrorCode::NonpositiveCapital,
                "initial capital must be > 0");
  const double x = problem.capital;
  const double T = lattice.grid().horizon;
  Plan plan{constant_process(x / T, lattice), std::vector<double>(lattice.leaf_count(), 0.0)};
  if (!problem.utilities.consumption_only()) {
    std::fill(plan.terminal.begin(), plan.terminal.end(), x);
    const double scale = x / budget(plan, problem, lattice);
    for (auto& s : plan.consumption.values)
      for (auto& v : s) v *= scale;
    for (auto& v : plan.terminal) v *= scale;
  }
  return plan;
}

namespace {

bool plan_is_positive(const Plan& plan, bool terminal) {
  for (const auto& slice : plan.consumption.values)
    for (double v : slice)
      if (!(v > 0.0) || !std::isfinite(v)) return false;
  if (terminal)
    for (double v : plan.terminal)
      if (!(v > 0.0) || !std::isfinite(v)) return false;
  return true;
}

double relative_change(const Plan& from, const Plan& to, const Lattice& lattice, bool terminal) {
  double worst = 0.0;
  for (int k = 0; k < lattice.steps(); ++k) {
    const auto& a = from.consumption.slice(k);
    const auto& b = to.consumption.slice(k);
    for (std::size_t n = 0; n < a.size(); ++n)
      worst = std::max(worst, std::abs(b[n] - a[n]) / std::abs(a[n]));
  }
  if (terminal)
    for (std::size_t n = 0; n < from.terminal.size(); ++n)
      worst = std::max(worst, std::abs(to.terminal[n] - from.terminal[n]) / std::abs(from.terminal[n]));
  return worst;
}

}  // namespace

FixedPointResult solve_fixed_point(double nu, const BudgetProblem& problem, const Lattice& lattice,
                                   const FixedPointOptions& options, const Plan* start) {
  RBSDE_REQUIRE(nu > 0.0, ErrorCode::NonpositiveNu, "multiplier nu must be > 0");
  RBSDE_REQUIRE(options.damping > 0.0 && options.damping <= 1.0, ErrorCode::InvalidArgument,
                "damping must lie in (0, 1]");
  const bool terminal = !problem.utilities.consumption_only();
  const double rho = options.damping;

  FixedPointResult result;
  result.plan = start ? *start : initial_plan(problem, lattice);
  for (;;) {
    result.solution = plan_value(result.plan, problem, lattice);
    const Plan next = candidate_plan(nu, result.solution.qstar, problem, lattice);
    result.change = relative_change(result.plan, next, lattice, terminal);
    if (result.change <= options.tol) return result;
    if (!plan_is_positive(next, terminal) || !std::isfinite(result.change))
      throw NoConvergenceError("plan fixed point diverged after " +
                                   std::to_string(result.iterations) + " iterations",
                               std::move(result));
    if (result.iterations >= options.max_iter)
      throw NoConvergenceError("plan fixed point did not converge in " +
                                   std::to_string(options.max_iter) +
                                   " iterations (last relative change " +
                                   std::to_string(result.change) + ")",
                               std::move(result));
    for (int k = 0; k <= lattice.steps(); ++k) {
      auto& c = result.plan.consumption.slice(k);
      const auto& cn = next.consumption.slice(k);
      for (std::size_t n = 0; n < c.size(); ++n) c[n] = (1.0 - rho) * c[n] + rho * cn[n];
    }
    if (terminal)
      for (std::size_t n = 0; n < result.plan.terminal.size(); ++n)
        result.plan.terminal[n] = (1.0 - rho) * result.plan.terminal[n] + rho * next.terminal[n];
    ++result.iterations;
  }
}

NuSolution solve_nu(const BudgetProblem& problem, const Lattice& lattice, double tol,
                    const FixedPointOptions& options) {
  RBSDE_REQUIRE(problem.capital > 0.0, ErrorCode::NonpositiveCapital,
                "initial capital must be > 0");
  const double x = problem.capital;
  NuSolution out;
  FixedPointResult last;
  bool have_last = false;

  auto eval = [&](double nu) {
    // Warm start from the candidate of the previous solve at the new nu; for
    // log utility this is already the fixed point.
    Plan warm;
    if (have_last) warm = candidate_plan(nu, last.solution.qstar, problem, lattice);
    last = solve_fixed_point(nu, problem, lattice, options, have_last ? &warm : nullptr);
    have_last = true;
    const double f = budget(last.plan, problem, lattice);
    ++out.evaluations;
    auto pos = std::lower_bound(out.trace.begin(), out.trace.end(), std::make_pair(nu, f));
    pos = out.trace.insert(pos, {nu, f});
    if (pos != out.trace.begin())
      RBSDE_REQUIRE(std::prev(pos)->second > f, ErrorCode::BracketFailure,
                    "budget map f(nu) is not strictly decreasing");
    if (std::next(pos) != out.trace.end())
      RBSDE_REQUIRE(std::next(pos)->second < f, ErrorCode::BracketFailure,
                    "budget map f(nu) is not strictly decreasing");
    return f;
  };
  auto done = [&](double nu, double f) {
    out.nu = nu;
    out.budget = f;
    out.fixed_point = last;
    return out;
  };

  double nu = 1.0;
  double f = eval(nu);
  if (std::abs(f - x) <= tol) return done(nu, f);
  double lo, hi;  // f(lo) > x > f(hi)
  constexpr int kMaxExpand = 200;
  int expand = 0;
  if (f > x) {
    lo = nu;
    for (;;) {
      RBSDE_REQUIRE(++expand <= kMaxExpand, ErrorCode::BracketFailure, "no upper bracket for nu");
      nu *= 2.0;
      f = eval(nu);
      if (std::abs(f - x) <= tol) return done(nu, f);
      if (f < x) break;
      lo = nu;
    }
    hi = nu;
  } else {
    hi = nu;
    for (;;) {
      RBSDE_REQUIRE(++expand <= kMaxExpand, ErrorCode::BracketFailure, "no lower bracket for nu");
      nu *= 0.5;
      f = eval(nu);
      if (std::abs(f - x) <= tol) return done(nu, f);
      if (f > x) break;
      hi = nu;
    }
    lo = nu;
  }
  for (int iter = 0; iter < 200; ++iter) {
    nu = std::sqrt(lo * hi);
    RBSDE_REQUIRE(nu > lo && nu < hi, ErrorCode::BracketFailure,
                  "bisection exhausted floating-point resolution before reaching the tolerance");
    f = eval(nu);
    if (std::abs(f - x) <= tol) return done(nu, f);
    (f > x ? lo : hi) = nu;
  }
  throw Error(ErrorCode::BracketFailure, "bisection did not reach the budget tolerance");
}

StationarityResidual verify_stationarity(const Plan& plan, const BsdeSolution& sol, double nu,
                                         const BudgetProblem& problem, const Lattice& lattice) {
  StationarityResidual r;
  const int K = lattice.steps();
  for (int k = 0; k < K; ++k) {
    const auto& c = plan.consumption.slice(k);
    for (std::size_t n = 0; n < c.size(); ++n)
      r.running = std::max(r.running, std::abs(problem.utilities.running.marginal(c[n]) /
                                                    marginal_target(nu, sol.qstar, problem, k, n) -
                                                1.0));
  }
  if (!problem.utilities.consumption_only())
    for (std::size_t n = 0; n < plan.terminal.size(); ++n)
      r.terminal =
          std::max(r.terminal, std::abs(problem.utilities.terminal.marginal(plan.terminal[n]) /
                                            marginal_target(nu, sol.qstar, problem, K, n) -
                                        1.0));
  return r;
}

double lagrangian(const Plan& plan, const BudgetProblem& problem, double nu,
                  const Lattice& lattice) {
  const double v0 = plan_value(plan, problem, lattice).y0();
  if (nu == 0.0) return v0;
  return v0 + nu * (problem.capital - budget(plan, problem, lattice));
}

std::vector<ValuePoint> value_curve(const BudgetProblem& problem, const Lattice& lattice,
                                    const std::vector<double>& capitals, double tol,
                                    const FixedPointOptions& options) {
  std::vector<ValuePoint> out;
  BudgetProblem local = problem;
  for (double x : capitals) {
    local.capital = x;
    const auto s = solve_nu(local, lattice, tol, options);
    out.push_back({x, s.nu, s.fixed_point.solution.y0()});
  }
  return out;
}

}  // namespace rbsde
