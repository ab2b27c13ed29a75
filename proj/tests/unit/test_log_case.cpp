#include "doctest.h"
#include "helpers.hpp"
#include "rbsde/error.hpp"
#include "rbsde/log_case.hpp"

using namespace rbsde;

TEST_CASE("alpha solutions") {
  TimeGrid g(1.0, 8);
  auto zero = alpha_solve(std::vector<double>(8, 0.0), g);
  for (int k = 0; k <= 8; ++k) CHECK(zero[std::size_t(k)] == doctest::Approx(1.0 - g.time(k)).epsilon(1e-15));

  auto one = alpha_solve(std::vector<double>(8, 1.0), g);
  CHECK(one[0] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  CHECK(one[0] == doctest::Approx(0.63212).epsilon(1e-5));
  CHECK(one.back() == 0.0);
  for (int k = 0; k <= 8; ++k)
    CHECK(std::abs(one[std::size_t(k)] - alpha_closed_form(1.0, 1.0, g.time(k))) <= 1e-10);
  for (int k = 0; k < 8; ++k) CHECK(one[std::size_t(k)] > 0.0);

  auto rec = alpha_solve(std::vector<double>(8, 1.0), g, AlphaMethod::RecursionExact);
  CHECK(alpha_ode_residual(rec, std::vector<double>(8, 1.0), g) <= 1e-10);
  CHECK(alpha_ode_residual(one, std::vector<double>(8, 1.0), g) > 1e-3);
  CHECK(parse_alpha_method("dp_exact") == AlphaMethod::DpExact);
}

TEST_CASE("k function") {
  CHECK(kfun(0.0) == 0.0);
  CHECK(kfun(1.0) == -0.5);
  CHECK_THROWS_AS(kfun(-1.0), Error);
  for (double a = 0.0; a < 3.0; a += 0.137) CHECK(std::abs((1 + kfun(a)) * (1 + a) - 1.0) <= 1e-14);
}

TEST_CASE("pbar measure") {
  auto lat = testing::make_lattice(1.0, 2, 0, 1, 0.3);
  GirsanovTilt tilt{{}, {std::log(2.0)}};
  auto same = pbar_measure({0.0, 0.0, 0.0}, tilt, lat);
  CHECK(same.transitions() == lat.transitions());
  auto q = pbar_measure({-0.5, -0.5, 0.0}, tilt, lat);
  const double w = std::pow(2.0, -0.5);
  CHECK(w == doctest::Approx(0.70711).epsilon(1e-5));
  const double pj = 0.15 * w / (0.85 + 0.15 * w);
  CHECK(q.child_probs(lat, 0, 0)[1] == doctest::Approx(pj).epsilon(1e-14));

  auto bl = testing::make_lattice(1.0, 1, 1, 0);
  CHECK_THROWS_AS(pbar_measure({-2.0, 0.0}, GirsanovTilt{{1.0}, {}}, bl), Error);
}

TEST_CASE("extract J and reconstruction") {
  auto lat = testing::make_lattice(1.0, 2, 1, 0);
  auto alpha = alpha_solve({0.5, 0.5}, lat.grid());
  auto c = constant_process(1.7, lat);
  AdaptedProcess v = constant_process(0.0, lat);
  for (int k = 0; k <= 2; ++k)
    for (auto& x : v.slice(k)) x = alpha[std::size_t(k)] * std::log(1.7);
  auto J = extract_J(v, c, alpha, lat);
  for (auto& s : J)
    for (double x : s) CHECK(std::abs(x) <= 1e-15);
  CHECK(reconstruction_residual(v, c, alpha, J, lat) <= 1e-14);
}

TEST_CASE("cstar forward") {
  auto lat = testing::make_lattice(1.0, 2, 1, 0);
  auto base = NodeMeasure::base(lat);
  auto c = cstar_forward(4.0, base, base, zero_discount(lat), lat);
  for (auto& s : c.values)
    for (double x : s) CHECK(x == 0.25);
  CHECK_THROWS_AS(cstar_forward(0.0, base, base, zero_discount(lat), lat), Error);
}

TEST_CASE("log case on deterministic coefficients") {
  std::vector<double> disp, gap;
  for (int K : {2, 4, 8}) {
    auto lat = testing::make_lattice(1.0, K, 1, 1, 0.5);
    auto s = solve_log_case(lat, 1.0, GirsanovTilt{{0.3}, {0.2}}, 1.0);
    CHECK(s.reconstruction <= 1e-14);
    CHECK(s.cstar_vs_plan <= 1e-12);
    CHECK(s.J_spread.back() == 0.0);
    for (auto v : s.J.back()) CHECK(v == 0.0);
    double d = 0.0;
    for (double x : s.J_dispersion) d = std::max(d, x);
    disp.push_back(d);
    gap.push_back(std::abs(s.J_ode[0] - s.J_mean[0]));

    // Scheme-matched alpha makes J exactly deterministic.
    auto m = solve_log_case(lat, 1.0, GirsanovTilt{{0.3}, {0.2}}, 1.0, AlphaMethod::DpExact);
    for (double x : m.J_spread) CHECK(x <= 1e-13);
  }
  for (std::size_t i = 1; i < disp.size(); ++i) {
    CHECK(disp[i - 1] / disp[i] >= 1.6);
    CHECK(disp[i - 1] / disp[i] <= 2.4);
    CHECK(gap[i - 1] / gap[i] >= 1.6);
    CHECK(gap[i - 1] / gap[i] <= 2.4);
  }
}

TEST_CASE("J equation without jumps or drift") {
  auto lat = testing::make_lattice(1.0, 4, 1, 0);
  auto s = solve_log_case(lat, 1.0, GirsanovTilt{{0.0}, {}}, 1.0);
  for (double x : s.J_spread) CHECK(x <= 1e-13);
  CHECK(s.J_ode.back() == 0.0);
  CHECK(std::abs(s.J_ode[0] - s.J_mean[0]) <= 0.06);
}
