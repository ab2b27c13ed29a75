#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/measure.hpp"

namespace rbsde {

/// Jump-diffusion market with n = p + d risky assets and a unit savings
/// account. One step of asset i on the tree:
///   S_child / S_node = 1 + mu_i dt + sum_m sigma_im b_m sqrt(dt)
///                        + sum_j phi_ij (dH_j - lambda_j dt)
struct Market {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;   // n x p
  Eigen::MatrixXd phi;     // n x d
  Eigen::VectorXd lambda;  // d
  Eigen::MatrixXd Sigma;   // [sigma, phi * diag(lambda)]
  double condition = 0.0;
  double determinant = 0.0;
  std::vector<AdaptedProcess> prices;

  int assets() const { return static_cast<int>(mu.size()); }
};

struct MarketInputs {
  std::vector<double> mu;
  std::vector<double> sigma;   // row-major n x p
  std::vector<double> phi;     // row-major n x d
  std::vector<double> lambda;  // empty: taken from the lattice
  std::vector<double> s0;      // empty: all ones
};

/// Condition numbers above this count as singular.
inline constexpr double kMaxCondition = 1e12;

Market build_market(const MarketInputs& in, const Lattice& lattice);

struct RiskPremia {
  Eigen::VectorXd theta;  // p
  Eigen::VectorXd gamma;  // d
  Eigen::VectorXd z;      // -ln(1 + gamma)

  GirsanovTilt tilt() const;
};

/// Solves Sigma (theta, gamma) = -mu.
RiskPremia market_price_of_risk(const Market& market);

NodeMeasure pricing_measure(const RiskPremia& premia, const Lattice& lattice);

/// Per asset: max over non-leaf nodes of |E^Q[S_child - S_node]| / S_node.
std::vector<double> martingale_residual(const Market& market, const NodeMeasure& q,
                                        const Lattice& lattice);

/// X_0 = x, X_child = X_node + sum_i pi_i (S_child - S_node) - c dt, pi in shares.
AdaptedProcess wealth_path(double x, const std::vector<AdaptedProcess>& pi,
                           const AdaptedProcess& c, const Market& market,
                           const Lattice& lattice);

struct Admissibility {
  bool ok = true;
  int level = -1;
  std::size_t node = 0;
  double value = 0.0;
};

/// X >= 0 at every node; on failure reports the first violation in
/// (time, node) order.
Admissibility check_admissible(const AdaptedProcess& wealth);

/// E^Q[sum_k c_k dt + X_T] - x.
double budget_gap(double x, const AdaptedProcess& c, const AdaptedProcess& wealth,
                  const NodeMeasure& q, const Lattice& lattice);

}  // namespace rbsde
