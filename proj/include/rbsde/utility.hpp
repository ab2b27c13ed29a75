#pragma once

#include <string>
#include <vector>

#include "rbsde/lattice.hpp"

namespace rbsde {

enum class UtilityKind { Log, Power, None };

/// Utility with Inada conditions: log, or power x^gamma / gamma with
/// gamma in (0, 1). `None` is only meaningful as a terminal utility and
/// selects consumption-only mode.
class Utility {
 public:
  static Utility log() { return Utility(UtilityKind::Log, 0.0); }
  static Utility power(double gamma);
  static Utility none() { return Utility(UtilityKind::None, 0.0); }
  /// Parses "log", "power:<gamma>" or "none".
  static Utility parse(const std::string& text);

  UtilityKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  bool is_none() const { return kind_ == UtilityKind::None; }

  double value(double x) const;
  double marginal(double x) const;
  /// I = (U')^{-1}.
  double inverse_marginal(double y) const;
  /// lim sup x U'(x) / U(x) as x -> infinity.
  double asymptotic_elasticity() const;

  std::string describe() const;

 private:
  Utility(UtilityKind kind, double gamma) : kind_(kind), gamma_(gamma) {}
  UtilityKind kind_;
  double gamma_;
};

struct UtilitySpec {
  Utility running = Utility::log();
  Utility terminal = Utility::log();

  bool consumption_only() const { return terminal.is_none(); }
};

/// Consumption rate per node on slices 0..K-1 and a terminal claim per leaf.
struct Plan {
  AdaptedProcess consumption;
  std::vector<double> terminal;
};

/// U(c) on slices 0..K-1 (slice K is zero).
AdaptedProcess running_utility(const Plan& plan, const UtilitySpec& utilities,
                               const Lattice& lattice);
/// U_T bar(psi) per leaf, zero in consumption-only mode.
std::vector<double> terminal_utility(const Plan& plan, const UtilitySpec& utilities);

}  // namespace rbsde
