#include "rbsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rbsde/bsdej.hpp"
#include "rbsde/error.hpp"
#include "rbsde/utility.hpp"

namespace rbsde {

namespace {

OracleRow upper(std::string name, double oracle, double solver, double tol) {
  const double gap = std::abs(solver - oracle);
  return {std::move(name), oracle, solver, gap, tol, gap <= tol};
}

// Oracle must not fall below the solver by more than tol.
OracleRow lower_bound(std::string name, double oracle, double solver, double tol) {
  const double gap = std::max(0.0, solver - oracle);
  return {std::move(name), oracle, solver, gap, tol, gap <= tol};
}

AdaptedProcess shifted(const AdaptedProcess& base, const Lattice& lat, std::mt19937_64& rng,
                       double hi) {
  std::uniform_real_distribution<double> u(0.0, hi);
  auto out = base;
  for (int k = 0; k < lat.steps(); ++k)
    for (auto& v : out.slice(k)) v += u(rng);
  return out;
}

AdaptedProcess random_process(const Lattice& lat, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  auto out = constant_process(0.0, lat);
  for (auto& s : out.values)
    for (auto& v : s) v = u(rng);
  return out;
}

std::vector<double> random_leaves(const Lattice& lat, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(lat.leaf_count());
  for (auto& v : out) v = u(rng);
  return out;
}

}  // namespace

bool all_pass(const std::vector<OracleRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const OracleRow& r) { return r.pass; });
}

std::vector<OracleRow> run_verify(const Lattice& lattice, const CriterionSpec& spec,
                                  const VerifyOptions& opt) {
  RBSDE_REQUIRE(lattice.steps() <= kVerifyMaxSteps && lattice.branching() <= kVerifyMaxBranching,
                ErrorCode::TreeTooLarge,
                "verify enumerates measures exhaustively; use steps <= " +
                    std::to_string(kVerifyMaxSteps) + " and at most " +
                    std::to_string(kVerifyMaxBranching) +
                    " children per node (2^brownian_dim * (channels + 1))");
  std::vector<OracleRow> rows;
  std::mt19937_64 rng(opt.seed);

  auto dp = solve_criterion(spec, lattice, Scheme::Dp);
  if (opt.corrupt)
    for (auto& s : dp.value)
      for (auto& v : s) v += 1e-3;
  const double y0 = dp.y0();

  rows.push_back(upper("duality_grid", tree_min_grid(spec, lattice, opt.grid_step).value, y0,
                       10.0 * opt.grid_step));
  rows.push_back(upper("duality_qstar", criterion_gamma(spec, dp.qstar, lattice), y0, 1e-10));

  double tilted = INFINITY;
  double general = INFINITY;
  for (int i = 0; i < opt.samples; ++i) {
    tilted = std::min(tilted, criterion_gamma(spec, random_tilted_measure(lattice, rng), lattice));
    general = std::min(general, criterion_gamma(spec, random_measure(lattice, rng), lattice));
  }
  rows.push_back(lower_bound("tilted_measures_bound", tilted, y0, 1e-10));
  rows.push_back(lower_bound("random_measures_bound", general, y0, 1e-10));
  rows.push_back(lower_bound("joint_search_bound",
                             joint_random_search(spec, lattice, opt.samples, opt.seed + 1).best,
                             y0, 1e-10));

  const auto rec = solve_criterion(spec, lattice, Scheme::Recursion);
  rows.push_back(upper("recursion_residual", 0.0, verify_recursion_all(lattice, rec), 1e-10));
  rows.push_back(upper("k_martingale", 0.0, verify_k_martingale(lattice, rec), 1e-10));

  {
    const auto reduced = beta_reduce(spec);
    const auto z = solve_bsdej(lattice, reduced.cost, reduced.terminal, zero_discount(lattice));
    const auto cf = closed_form_delta0(lattice, reduced.cost, reduced.terminal);
    double worst = 0.0;
    for (int k = 0; k <= lattice.steps(); ++k)
      for (std::size_t n = 0; n < lattice.level_size(k); ++n)
        worst = std::max(worst, std::abs(z.value[static_cast<std::size_t>(k)][n] - cf.at(k, n)));
    rows.push_back(upper("delta0_closed_form", 0.0, worst, 1e-12));
  }

  double order = -INFINITY;
  double bound = -INFINITY;
  double concave = INFINITY;
  for (int i = 0; i < opt.samples; ++i) {
    const auto u1 = random_process(lattice, rng, -1.0, 1.0);
    const auto t1 = random_leaves(lattice, rng, -1.0, 1.0);
    const auto u2 = shifted(u1, lattice, rng, 0.5);
    auto t2 = t1;
    std::uniform_real_distribution<double> u(0.0, 0.5);
    for (auto& v : t2) v += u(rng);
    const auto r = comparison_check(solve_bsdej(lattice, u1, t1, spec.discount),
                                    solve_bsdej(lattice, u2, t2, spec.discount), lattice);
    order = std::max(order, r.max_order_violation);
    bound = std::max(bound, r.bound_gap);

    CriterionSpec a = spec;
    CriterionSpec b = spec;
    a.cost = u1;
    a.terminal = t1;
    b.cost = random_process(lattice, rng, -1.0, 1.0);
    b.terminal = random_leaves(lattice, rng, -1.0, 1.0);
    concave = std::min(concave, concavity_check(a, b, {0.25, 0.5, 0.75}, lattice, Scheme::Dp));
  }
  rows.push_back({"comparison_order", 0.0, order, std::max(0.0, order), 1e-12, order <= 1e-12});
  rows.push_back({"comparison_bound", 0.0, bound, std::max(0.0, bound), 1e-12, bound <= 1e-12});
  rows.push_back({"concavity", 0.0, concave, std::max(0.0, -concave), 1e-12, concave >= -1e-12});

  // Directional derivative of the plan value against finite differences.
  {
    const UtilitySpec util;
    double worst_rel = 0.0;
    double worst_ratio = INFINITY;
    for (int i = 0; i < opt.gateaux_pairs; ++i) {
      Plan p1{random_process(lattice, rng, 0.5, 2.0), random_leaves(lattice, rng, 0.5, 2.0)};
      Plan p2 = p1;
      std::uniform_real_distribution<double> up(0.0, 1.0);
      for (int k = 0; k < lattice.steps(); ++k)
        for (auto& v : p2.consumption.slice(k)) v *= 1.0 + up(rng);
      for (auto& v : p2.terminal) v *= 1.0 + up(rng);
      auto value = [&](double eps) {
        Plan p = p1;
        for (int k = 0; k < lattice.steps(); ++k)
          for (std::size_t n = 0; n < lattice.level_size(k); ++n)
            p.consumption.slice(k)[n] += eps * (p2.consumption.at(k, n) - p1.consumption.at(k, n));
        for (std::size_t n = 0; n < p.terminal.size(); ++n)
          p.terminal[n] += eps * (p2.terminal[n] - p1.terminal[n]);
        return solve_bsdej(lattice, running_utility(p, util, lattice), terminal_utility(p, util),
                           spec.discount)
            .y0();
      };
      const double v0 = value(0.0);
      const auto sol = solve_bsdej(lattice, running_utility(p1, util, lattice),
                                   terminal_utility(p1, util), spec.discount);
      const double d = gateaux_derivative(sol, p1, p2, util, lattice)[0][0];
      const double e2 = std::abs((value(1e-2) - v0) / 1e-2 - d);
      const double e3 = std::abs((value(1e-3) - v0) / 1e-3 - d);
      worst_rel = std::max(worst_rel, e3 / std::abs(d));
      worst_ratio = std::min(worst_ratio, e2 / e3);
    }
    rows.push_back({"gateaux_fd_rel_error", 0.0, worst_rel, worst_rel, 1e-2, worst_rel <= 1e-2});
    rows.push_back({"gateaux_fd_error_ratio", 5.0, worst_ratio, std::max(0.0, 5.0 - worst_ratio),
                    0.0, worst_ratio >= 5.0});
  }
  return rows;
}

}  // namespace rbsde
