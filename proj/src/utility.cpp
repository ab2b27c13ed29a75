#include "rbsde/utility.hpp"

#include <cmath>
#include <limits>

#include "rbsde/error.hpp"

namespace rbsde {

Utility Utility::power(double gamma) {
  RBSDE_REQUIRE(gamma > 0.0 && gamma < 1.0, ErrorCode::InvalidArgument,
                "power utility needs gamma in (0, 1)");
  return Utility(UtilityKind::Power, gamma);
}

Utility Utility::parse(const std::string& text) {
  if (text == "log") return log();
  if (text == "none") return none();
  const std::string prefix = "power:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      return power(std::stod(text.substr(prefix.size())));
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown utility '" + text + "' (log | power:<gamma> | none)");
}

double Utility::value(double x) const {
  switch (kind_) {
    case UtilityKind::Log: return std::log(x);
    case UtilityKind::Power: return std::pow(x, gamma_) / gamma_;
    case UtilityKind::None: return 0.0;
  }
  return 0.0;
}

double Utility::marginal(double x) const {
  switch (kind_) {
    case UtilityKind::Log: return 1.0 / x;
    case UtilityKind::Power: return std::pow(x, gamma_ - 1.0);
    case UtilityKind::None: return 0.0;
  }
  return 0.0;
}

double Utility::inverse_marginal(double y) const {
  switch (kind_) {
    case UtilityKind::Log: return 1.0 / y;
    case UtilityKind::Power: return std::pow(y, 1.0 / (gamma_ - 1.0));
    case UtilityKind::None: break;
  }
  throw Error(ErrorCode::InvalidArgument, "inverse marginal of the zero utility is undefined");
}

double Utility::asymptotic_elasticity() const {
  switch (kind_) {
    case UtilityKind::Log: return 0.0;
    case UtilityKind::Power: return gamma_;
    case UtilityKind::None: break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string Utility::describe() const {
  switch (kind_) {
    case UtilityKind::Log: return "log";
    case UtilityKind::Power: return "power:" + std::to_string(gamma_);
    case UtilityKind::None: return "none";
  }
  return "?";
}

AdaptedProcess running_utility(const Plan& plan, const UtilitySpec& utilities,
                               const Lattice& lattice) {
  AdaptedProcess u{zero_values(lattice), ProcessKind::Adapted};
  for (int k = 0; k < lattice.steps(); ++k) {
    const auto& c = plan.consumption.slice(k);
    auto& out = u.slice(k);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = utilities.running.value(c[n]);
  }
  return u;
}

std::vector<double> terminal_utility(const Plan& plan, const UtilitySpec& utilities) {
  std::vector<double> out(plan.terminal.size(), 0.0);
  if (utilities.consumption_only()) return out;
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = utilities.terminal.value(plan.terminal[n]);
  return out;
}

}  // namespace rbsde
