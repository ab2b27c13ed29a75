#pragma once

// Logarithmic utility with consumption only and deterministic coefficients:
// V = alpha ln c* + (1 + alpha) J with alpha' = delta alpha - 1, alpha(T) = 0
// and k = -alpha / (1 + alpha).

#include <vector>

#include "rbsde/bsdej.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/max_principle.hpp"
#include "rbsde/measure.hpp"

namespace rbsde {

/// Exponential: alpha_k = alpha_{k+1} e^{-delta dt} + (1 - e^{-delta dt}) / delta,
///   exact for piecewise-constant delta.
/// RecursionExact: alpha_k = (alpha_{k+1} + dt) / (1 + delta dt), the implicit
///   Euler step; satisfies the discrete residual below exactly.
/// DpExact: alpha_k = dt + e^{-delta dt} alpha_{k+1}, the discounted sum the
///   dp scheme produces for ln c.
enum class AlphaMethod { Exponential, RecursionExact, DpExact };

AlphaMethod parse_alpha_method(const std::string& text);

/// alpha on slices 0..K from delta per step (size K).
std::vector<double> alpha_solve(const std::vector<double>& delta, const TimeGrid& grid,
                                AlphaMethod method = AlphaMethod::Exponential);

/// (1 - e^{-delta (T - t)}) / delta, and T - t at delta = 0.
double alpha_closed_form(double delta, double horizon, double t);

/// max_k |(alpha_{k+1} - alpha_k) / dt - (delta_k alpha_k - 1)|.
double alpha_ode_residual(const std::vector<double>& alpha, const std::vector<double>& delta,
                          const TimeGrid& grid);

/// k = -alpha / (1 + alpha).
double kfun(double alpha);

/// Per-step weights (1 - k theta_m b_m sqrt(dt)) and e^{k z_j}, renormalized;
/// k given per slice.
NodeMeasure pbar_measure(const std::vector<double>& k, const GirsanovTilt& tilt,
                         const Lattice& lattice);

/// J = (V - alpha ln c*) / (1 + alpha) on every node.
NodeValues extract_J(const AdaptedProcess& value, const AdaptedProcess& cstar,
                     const std::vector<double>& alpha, const Lattice& lattice);

/// max |V - alpha ln c* - (1 + alpha) J|.
double reconstruction_residual(const AdaptedProcess& value, const AdaptedProcess& cstar,
                               const std::vector<double>& alpha, const NodeValues& J,
                               const Lattice& lattice);

/// Backward Euler for the deterministic J equation
/// J' = (1+delta)(1+k) J - k delta + k(1+k)|theta|^2 / 2
///      + sum_i (k (e^{-z_i} - 1) + e^{k z_i} - 1) lambda_i,  J(T) = 0.
std::vector<double> solve_J_ode(double delta, const std::vector<double>& lambda,
                                const std::vector<double>& z, const std::vector<double>& theta,
                                const std::vector<double>& alpha, const TimeGrid& grid);

/// c* = S Z* / (nu Z~) on every node.
AdaptedProcess cstar_forward(double nu, const NodeMeasure& zstar, const NodeMeasure& pricing,
                             const DiscountSpec& discount, const Lattice& lattice);

struct LogCaseSolution {
  std::vector<double> alpha;
  std::vector<double> k;
  double nu = 0.0;
  AdaptedProcess value;
  AdaptedProcess cstar;
  NodeValues J;
  NodeValues j;  // jump sizes of J, d per node on slices 0..K-1
  NodeMeasure pbar;
  double reconstruction = 0.0;
  double cstar_vs_plan = 0.0;  // max |c* - candidate plan|
  std::vector<double> J_mean;
  std::vector<double> J_spread;      // per-slice max - min
  std::vector<double> J_dispersion;  // per-slice standard deviation under P
  std::vector<double> J_ode;
};

/// Constant delta, intensities and pricing tilt; log running utility and no
/// terminal utility.
LogCaseSolution solve_log_case(const Lattice& lattice, double delta, const GirsanovTilt& pricing,
                               double capital, AlphaMethod method = AlphaMethod::Exponential,
                               Scheme scheme = Scheme::Dp, const FixedPointOptions& options = {},
                               double nu_tol = 1e-10);

}  // namespace rbsde
