#include "rbsde/log_case.hpp"

#include <algorithm>
#include <cmath>

#include "rbsde/error.hpp"
#include "rbsde/parallel.hpp"

namespace rbsde {

AlphaMethod parse_alpha_method(const std::string& text) {
  if (text == "exponential") return AlphaMethod::Exponential;
  if (text == "recursion_exact") return AlphaMethod::RecursionExact;
  if (text == "dp_exact") return AlphaMethod::DpExact;
  throw Error(ErrorCode::ConfigError,
              "unknown alpha method '" + text + "' (exponential | recursion_exact | dp_exact)");
}

std::vector<double> alpha_solve(const std::vector<double>& delta, const TimeGrid& grid,
                                AlphaMethod method) {
  const int K = grid.steps;
  RBSDE_REQUIRE(delta.size() == static_cast<std::size_t>(K), ErrorCode::InvalidArgument,
                "need one discount rate per step");
  const double dt = grid.dt();
  std::vector<double> alpha(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = K - 1; k >= 0; --k) {
    const auto lk = static_cast<std::size_t>(k);
    const double d = delta[lk];
    RBSDE_REQUIRE(d >= 0.0, ErrorCode::NegativeRate, "discount rate must be >= 0");
    const double next = alpha[lk + 1];
    switch (method) {
      case AlphaMethod::Exponential: {
        const double decay = std::exp(-d * dt);
        // (1 - e^{-d dt}) / d, written with expm1 so d -> 0 gives dt.
        const double gain = d > 0.0 ? -std::expm1(-d * dt) / d : dt;
        alpha[lk] = next * decay + gain;
        break;
      }
      case AlphaMethod::RecursionExact: alpha[lk] = (next + dt) / (1.0 + d * dt); break;
      case AlphaMethod::DpExact: alpha[lk] = dt + std::exp(-d * dt) * next; break;
    }
  }
  return alpha;
}

double alpha_closed_form(double delta, double horizon, double t) {
  if (delta == 0.0) return horizon - t;
  return -std::expm1(-delta * (horizon - t)) / delta;
}

double alpha_ode_residual(const std::vector<double>& alpha, const std::vector<double>& delta,
                          const TimeGrid& grid) {
  double worst = 0.0;
  const double dt = grid.dt();
  for (std::size_t k = 0; k + 1 < alpha.size(); ++k)
    worst = std::max(worst,
                     std::abs((alpha[k + 1] - alpha[k]) / dt - (delta[k] * alpha[k] - 1.0)));
  return worst;
}

double kfun(double alpha) {
  RBSDE_REQUIRE(1.0 + alpha != 0.0, ErrorCode::Singular, "k is undefined at alpha = -1");
  return -alpha / (1.0 + alpha);
}

NodeMeasure pbar_measure(const std::vector<double>& k, const GirsanovTilt& tilt,
                         const Lattice& lattice) {
  RBSDE_REQUIRE(k.size() >= static_cast<std::size_t>(lattice.steps()), ErrorCode::InvalidArgument,
                "need k on every slice");
  return tilt_to_measure(
      [&](const NodeState& s) {
        const double kk = k[static_cast<std::size_t>(s.level)];
        GirsanovTilt g;
        for (double th : tilt.theta) g.theta.push_back(-kk * th);
        for (double z : tilt.z) g.z.push_back(-kk * z);
        return g;
      },
      lattice);
}

NodeValues extract_J(const AdaptedProcess& value, const AdaptedProcess& cstar,
                     const std::vector<double>& alpha, const Lattice& lattice) {
  NodeValues J = zero_values(lattice);
  for (int k = 0; k <= lattice.steps(); ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const double a = alpha[lk];
    RBSDE_REQUIRE(1.0 + a > 0.0, ErrorCode::Singular, "1 + alpha must be positive");
    const auto& v = value.slice(k);
    const auto& c = cstar.slice(k);
    auto& out = J[lk];
    for (double ci : c) RBSDE_REQUIRE(ci > 0.0, ErrorCode::InvalidArgument, "c* must be positive");
    parallel_for(out.size(), [&](std::size_t n) {
      // alpha = 0 at the horizon: skip ln c* so J_T = V_T exactly.
      out[n] = a == 0.0 ? v[n] : (v[n] - a * std::log(c[n])) / (1.0 + a);
    });
  }
  return J;
}

double reconstruction_residual(const AdaptedProcess& value, const AdaptedProcess& cstar,
                               const std::vector<double>& alpha, const NodeValues& J,
                               const Lattice& lattice) {
  double worst = 0.0;
  for (int k = 0; k <= lattice.steps(); ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const double a = alpha[lk];
    for (std::size_t n = 0; n < J[lk].size(); ++n) {
      const double log_term = a == 0.0 ? 0.0 : a * std::log(cstar.at(k, n));
      worst = std::max(worst, std::abs(value.at(k, n) - log_term - (1.0 + a) * J[lk][n]));
    }
  }
  return worst;
}

std::vector<double> solve_J_ode(double delta, const std::vector<double>& lambda,
                                const std::vector<double>& z, const std::vector<double>& theta,
                                const std::vector<double>& alpha, const TimeGrid& grid) {
  RBSDE_REQUIRE(lambda.size() == z.size(), ErrorCode::InvalidArgument,
                "lambda and z must have one entry per channel");
  const int K = grid.steps;
  const double dt = grid.dt();
  double theta_sq = 0.0;
  for (double th : theta) theta_sq += th * th;
  std::vector<double> J(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = K - 1; k >= 0; --k) {
    const auto lk = static_cast<std::size_t>(k);
    const double kk = kfun(alpha[lk]);
    const double a = (1.0 + delta) * (1.0 + kk);
    double b = -kk * delta + 0.5 * kk * (1.0 + kk) * theta_sq;
    for (std::size_t i = 0; i < lambda.size(); ++i)
      b += (kk * std::expm1(-z[i]) + std::expm1(kk * z[i])) * lambda[i];
    // J_{k+1} - J_k = dt (a J_k + b)
    J[lk] = (J[lk + 1] - dt * b) / (1.0 + dt * a);
  }
  return J;
}

AdaptedProcess cstar_forward(double nu, const NodeMeasure& zstar, const NodeMeasure& pricing,
                             const DiscountSpec& discount, const Lattice& lattice) {
  RBSDE_REQUIRE(nu > 0.0, ErrorCode::NonpositiveNu, "multiplier nu must be > 0");
  AdaptedProcess c{zero_values(lattice), ProcessKind::Adapted};
  for (int k = 0; k <= lattice.steps(); ++k) {
    auto& out = c.slice(k);
    parallel_for(out.size(), [&](std::size_t n) {
      out[n] = discount.factor_at(k, n) * zstar.density(k, n) / (nu * pricing.density(k, n));
    });
  }
  return c;
}

LogCaseSolution solve_log_case(const Lattice& lattice, double delta, const GirsanovTilt& pricing,
                               double capital, AlphaMethod method, Scheme scheme,
                               const FixedPointOptions& options, double nu_tol) {
  RBSDE_REQUIRE(lattice.deterministic_intensities(), ErrorCode::InvalidArgument,
                "the log case needs deterministic intensities");
  const int K = lattice.steps();
  BudgetProblem problem;
  problem.capital = capital;
  problem.pricing = tilt_to_measure(pricing, lattice);
  problem.discount = delta == 0.0 ? zero_discount(lattice) : constant_discount(delta, lattice);
  problem.utilities = UtilitySpec{Utility::log(), Utility::none()};
  problem.scheme = scheme;
  const auto nu = solve_nu(problem, lattice, nu_tol, options);

  LogCaseSolution out;
  out.nu = nu.nu;
  out.alpha = alpha_solve(std::vector<double>(static_cast<std::size_t>(K), delta), lattice.grid(),
                          method);
  for (double a : out.alpha) out.k.push_back(kfun(a));
  out.value = AdaptedProcess{nu.fixed_point.solution.value, ProcessKind::Adapted};
  out.cstar = cstar_forward(nu.nu, nu.fixed_point.solution.qstar, problem.pricing,
                            problem.discount, lattice);
  for (int k = 0; k < K; ++k)
    for (std::size_t n = 0; n < lattice.level_size(k); ++n)
      out.cstar_vs_plan = std::max(
          out.cstar_vs_plan,
          std::abs(out.cstar.at(k, n) - nu.fixed_point.plan.consumption.at(k, n)));
  out.J = extract_J(out.value, out.cstar, out.alpha, lattice);
  out.reconstruction = reconstruction_residual(out.value, out.cstar, out.alpha, out.J, lattice);
  out.pbar = pbar_measure(out.k, pricing, lattice);

  const auto C = static_cast<std::size_t>(lattice.branching());
  const auto patterns = static_cast<std::size_t>(lattice.brownian_patterns());
  const auto d = static_cast<std::size_t>(lattice.jump_channels());
  out.j.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& next = out.J[lk + 1];
    auto& row = out.j[lk];
    row.assign(lattice.level_size(k) * d, 0.0);
    for (std::size_t n = 0; n < lattice.level_size(k); ++n) {
      double base = 0.0;
      for (std::size_t b = 0; b < patterns; ++b) base += next[n * C + b];
      base /= static_cast<double>(patterns);
      for (std::size_t i = 0; i < d; ++i) {
        double mean = 0.0;
        for (std::size_t b = 0; b < patterns; ++b) mean += next[n * C + (i + 1) * patterns + b];
        row[n * d + i] = mean / static_cast<double>(patterns) - base;
      }
    }
  }
  const auto path = NodeMeasure::base(lattice).path_probabilities(lattice);
  for (int k = 0; k <= K; ++k) {
    const auto lk = static_cast<std::size_t>(k);
    const auto& slice = out.J[lk];
    const auto [lo, hi] = std::minmax_element(slice.begin(), slice.end());
    double mean = 0.0;
    for (std::size_t n = 0; n < slice.size(); ++n) mean += path[lk][n] * slice[n];
    double var = 0.0;
    for (std::size_t n = 0; n < slice.size(); ++n)
      var += path[lk][n] * (slice[n] - mean) * (slice[n] - mean);
    out.J_mean.push_back(mean);
    out.J_spread.push_back(*hi - *lo);
    out.J_dispersion.push_back(std::sqrt(var));
  }
  std::vector<double> lambda;
  for (int i = 0; i < lattice.jump_channels(); ++i) lambda.push_back(lattice.intensity(0, 0, i));
  out.J_ode = solve_J_ode(delta, lambda, pricing.z, pricing.theta, out.alpha, lattice.grid());
  return out;
}

}  // namespace rbsde
