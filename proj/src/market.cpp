#include "rbsde/market.hpp"

#include <cmath>

#include "rbsde/error.hpp"
#include "rbsde/parallel.hpp"

namespace rbsde {

namespace {

Eigen::MatrixXd row_major(const std::vector<double>& v, int rows, int cols, const char* name) {
  RBSDE_REQUIRE(v.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                ErrorCode::InvalidArgument,
                std::string(name) + " must have " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " entries");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

// Relative one-step return of asset i into child slot s.
double step_return(const Market& m, int i, const Lattice& lat, int k, std::size_t node, int s) {
  double r = m.mu(i) * lat.dt();
  for (int a = 0; a < lat.brownian_dim(); ++a)
    r += m.sigma(i, a) * lat.brownian_increment(s, a);
  const int j = lat.jump_outcome(s);
  for (int c = 0; c < lat.jump_channels(); ++c) {
    const double dh = (j == c + 1 ? 1.0 : 0.0) - lat.intensity(k, node, c) * lat.dt();
    r += m.phi(i, c) * dh;
  }
  return r;
}

}  // namespace

Market build_market(const MarketInputs& in, const Lattice& lattice) {
  const int p = lattice.brownian_dim();
  const int d = lattice.jump_channels();
  const int n = p + d;
  RBSDE_REQUIRE(n > 0, ErrorCode::InvalidArgument, "market needs at least one risky asset");
  RBSDE_REQUIRE(in.mu.size() == static_cast<std::size_t>(n), ErrorCode::InvalidArgument,
                "mu must have p + d = " + std::to_string(n) + " entries");

  Market m;
  m.mu = Eigen::Map<const Eigen::VectorXd>(in.mu.data(), n);
  m.sigma = row_major(in.sigma, n, p, "sigma");
  m.phi = row_major(in.phi, n, d, "phi");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      RBSDE_REQUIRE(m.phi(i, j) > -1.0, ErrorCode::BadJumpSize,
                    "jump sizes must exceed -1, phi(" + std::to_string(i) + "," +
                        std::to_string(j) + ") = " + std::to_string(m.phi(i, j)));

  RBSDE_REQUIRE(lattice.deterministic_intensities(), ErrorCode::LatticeMismatch,
                "market coefficients are constant, so the lattice intensities must be too");
  m.lambda.resize(d);
  for (int j = 0; j < d; ++j) {
    const double tree = lattice.intensity(0, 0, j);
    if (in.lambda.empty()) {
      m.lambda(j) = tree;
      continue;
    }
    RBSDE_REQUIRE(in.lambda.size() == static_cast<std::size_t>(d), ErrorCode::InvalidArgument,
                  "lambda must have d entries");
    m.lambda(j) = in.lambda[static_cast<std::size_t>(j)];
    RBSDE_REQUIRE(std::abs(tree - m.lambda(j)) <= 1e-12,
                  ErrorCode::LatticeMismatch, "market intensities differ from the lattice");
  }

  m.Sigma.resize(n, n);
  m.Sigma.leftCols(p) = m.sigma;
  m.Sigma.rightCols(d) = m.phi * m.lambda.asDiagonal();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.Sigma);
  const auto& sv = svd.singularValues();
  m.condition = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : INFINITY;
  m.determinant = m.Sigma.determinant();
  RBSDE_REQUIRE(m.condition <= kMaxCondition, ErrorCode::SingularSigma,
                "Sigma = [sigma, lambda phi] is singular (condition " +
                    std::to_string(m.condition) + ")");

  const int K = lattice.steps();
  const int C = lattice.branching();
  m.prices.assign(static_cast<std::size_t>(n), constant_process(1.0, lattice));
  for (int i = 0; i < n; ++i) {
    auto& S = m.prices[static_cast<std::size_t>(i)];
    if (!in.s0.empty()) {
      RBSDE_REQUIRE(in.s0.size() == static_cast<std::size_t>(n), ErrorCode::InvalidArgument,
                    "s0 must have p + d entries");
      S.slice(0)[0] = in.s0[static_cast<std::size_t>(i)];
    }
    RBSDE_REQUIRE(S.slice(0)[0] > 0.0, ErrorCode::NonpositivePrice, "initial price must be positive");
    for (int k = 0; k < K; ++k) {
      const auto& cur = S.slice(k);
      auto& next = S.slice(k + 1);
      parallel_for(lattice.level_size(k), [&](std::size_t node) {
        for (int s = 0; s < C; ++s)
          next[lattice.child(node, s)] = cur[node] * (1.0 + step_return(m, i, lattice, k, node, s));
      });
      for (std::size_t c = 0; c < next.size(); ++c)
        RBSDE_REQUIRE(next[c] > 0.0, ErrorCode::NonpositivePrice,
                      "price of asset " + std::to_string(i) + " nonpositive at (" +
                          std::to_string(k + 1) + ", " + std::to_string(c) + ")");
    }
  }
  return m;
}

GirsanovTilt RiskPremia::tilt() const {
  return {std::vector<double>(theta.data(), theta.data() + theta.size()),
          std::vector<double>(z.data(), z.data() + z.size())};
}

RiskPremia market_price_of_risk(const Market& market) {
  RBSDE_REQUIRE(market.condition <= kMaxCondition, ErrorCode::SingularSigma,
                "Sigma is singular");
  const int p = static_cast<int>(market.sigma.cols());
  const int d = static_cast<int>(market.phi.cols());
  const Eigen::VectorXd sol = market.Sigma.fullPivLu().solve(-market.mu);
  RiskPremia out;
  out.theta = sol.head(p);
  out.gamma = sol.tail(d);
  out.z.resize(d);
  for (int j = 0; j < d; ++j) {
    RBSDE_REQUIRE(1.0 + out.gamma(j) > 0.0, ErrorCode::JumpPremiumOutOfRange,
                  "1 + gamma_" + std::to_string(j) + " = " + std::to_string(1.0 + out.gamma(j)) +
                      " must be positive");
    out.z(j) = -std::log1p(out.gamma(j));
  }
  return out;
}

NodeMeasure pricing_measure(const RiskPremia& premia, const Lattice& lattice) {
  return tilt_to_measure(premia.tilt(), lattice);
}

std::vector<double> martingale_residual(const Market& market, const NodeMeasure& q,
                                        const Lattice& lattice) {
  std::vector<double> out(static_cast<std::size_t>(market.assets()), 0.0);
  for (int i = 0; i < market.assets(); ++i) {
    const auto& S = market.prices[static_cast<std::size_t>(i)];
    for (int k = 0; k < lattice.steps(); ++k) {
      std::vector<double> res(lattice.level_size(k));
      parallel_for(res.size(), [&](std::size_t node) {
        const auto probs = q.child_probs(lattice, k, node);
        double e = 0.0;
        for (int s = 0; s < lattice.branching(); ++s)
          e += probs[static_cast<std::size_t>(s)] *
               (S.at(k + 1, lattice.child(node, s)) - S.at(k, node));
        res[node] = std::abs(e) / S.at(k, node);
      });
      for (double r : res) out[static_cast<std::size_t>(i)] = std::max(out[static_cast<std::size_t>(i)], r);
    }
  }
  return out;
}

AdaptedProcess wealth_path(double x, const std::vector<AdaptedProcess>& pi,
                           const AdaptedProcess& c, const Market& market,
                           const Lattice& lattice) {
  RBSDE_REQUIRE(pi.size() == static_cast<std::size_t>(market.assets()),
                ErrorCode::InvalidArgument, "one strategy process per asset required");
  auto X = constant_process(x, lattice);
  const double dt = lattice.dt();
  for (int k = 0; k < lattice.steps(); ++k) {
    const auto& cur = X.slice(k);
    auto& next = X.slice(k + 1);
    parallel_for(lattice.level_size(k), [&](std::size_t node) {
      for (int s = 0; s < lattice.branching(); ++s) {
        const auto ch = lattice.child(node, s);
        double v = cur[node] - c.at(k, node) * dt;
        for (std::size_t i = 0; i < pi.size(); ++i) {
          const auto& S = market.prices[i];
          v += pi[i].at(k, node) * (S.at(k + 1, ch) - S.at(k, node));
        }
        next[ch] = v;
      }
    });
  }
  return X;
}

Admissibility check_admissible(const AdaptedProcess& wealth) {
  for (std::size_t k = 0; k < wealth.values.size(); ++k)
    for (std::size_t n = 0; n < wealth.values[k].size(); ++n)
      if (wealth.values[k][n] < 0.0) return {false, static_cast<int>(k), n, wealth.values[k][n]};
  return {};
}

double budget_gap(double x, const AdaptedProcess& c, const AdaptedProcess& wealth,
                  const NodeMeasure& q, const Lattice& lattice) {
  return expectation(q, lattice, &c.values, leaves(wealth)) - x;
}

}  // namespace rbsde
