#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbsde/bsdej.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/log_case.hpp"
#include "rbsde/market.hpp"
#include "rbsde/max_principle.hpp"
#include "rbsde/measure.hpp"

namespace rbsde {

// Numbers accept either JSON numbers or expression strings where noted.

struct LatticeConfig {
  double horizon = 1.0;
  int steps = 3;
  int brownian_dim = 1;
  std::vector<std::string> intensities;  // one per jump channel
  std::string discount = "0.1";          // number, expression or "zero"
};

struct CriterionConfig {
  std::string running = "0.5 * W1";
  std::string terminal = "W1";
  double beta = 1.0;
};

struct OptimizationConfig {
  double capital = 1.0;
  std::string utility = "log";
  std::string terminal_utility = "log";
  Scheme scheme = Scheme::Dp;
  double nu_tol = 1e-10;
  double tol = 1e-10;
  int max_iter = 500;
  double damping = 0.5;
  std::optional<GirsanovTilt> pricing;  // else market premia, else P
  AlphaMethod alpha = AlphaMethod::Exponential;
};

struct RunConfig {
  std::uint64_t seed = 7;
  int threads = 0;
  int samples = 100;
  int gateaux_pairs = 20;
  double grid_step = 0.02;
  std::vector<int> refinements = {2, 4, 8};
};

struct Config {
  LatticeConfig lattice;
  CriterionConfig criterion;
  std::optional<MarketInputs> market;
  OptimizationConfig optimization;
  RunConfig run;
};

/// Unknown keys and type mismatches raise ConfigError.
Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);
/// Writes the documented defaults as JSON.
void write_default_config(std::ostream& os);

/// steps < 0 keeps the configured value.
Lattice make_lattice(const LatticeConfig& cfg, int steps = -1);
DiscountSpec make_discount(const LatticeConfig& cfg, const Lattice& lattice);
/// Constant discount rate, or ConfigError when the rate varies.
double constant_rate(const LatticeConfig& cfg);
CriterionSpec make_criterion(const Config& cfg, const Lattice& lattice);
UtilitySpec make_utilities(const OptimizationConfig& cfg);
/// Configured pricing tilt, else the market's premia, else zero.
GirsanovTilt make_pricing_tilt(const Config& cfg, const Lattice& lattice);
FixedPointOptions make_fixed_point_options(const OptimizationConfig& cfg);

}  // namespace rbsde
