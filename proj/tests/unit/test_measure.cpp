#include "doctest.h"
#include "helpers.hpp"
#include "rbsde/error.hpp"
#include "rbsde/oracle.hpp"
#include "rbsde/reference.hpp"

using namespace rbsde;

TEST_CASE("identity tilt returns the base measure") {
  auto lat = testing::make_lattice(1.0, 2, 1, 1, 0.3);
  auto q = tilt_to_measure(GirsanovTilt{{0.0}, {0.0}}, lat);
  for (std::size_t k = 1; k < q.transitions().size(); ++k)
    for (std::size_t n = 0; n < q.transitions()[k].size(); ++n)
      CHECK(q.transitions()[k][n] == doctest::Approx(lat.transitions()[k][n]).epsilon(1e-15));
  CHECK(relative_entropy(q, lat) == doctest::Approx(0.0));
}

TEST_CASE("jump tilt renormalization") {
  auto lat = testing::make_lattice(1.0, 1, 0, 1, 0.3);
  auto q = tilt_to_measure(GirsanovTilt{{}, {std::log(2.0)}}, lat);
  const auto c = q.child_probs(lat, 0, 0);
  CHECK(c[0] == doctest::Approx(0.7 / 0.85).epsilon(1e-14));
  CHECK(c[1] == doctest::Approx(0.15 / 0.85).epsilon(1e-14));
}

TEST_CASE("tilt validity bound") {
  auto lat = testing::make_lattice(1.0, 1, 1, 0);
  try {
    tilt_to_measure(GirsanovTilt{{1.5}, {}}, lat);
    FAIL("expected TiltTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TiltTooLarge);
  }
}

TEST_CASE("relative entropy examples") {
  auto lat = testing::make_lattice(1.0, 1, 1, 0);
  NodeValues t = lat.transitions();
  t[1] = {0.75, 0.25};
  CHECK(relative_entropy(NodeMeasure(lat, t), lat) ==
        doctest::Approx(0.75 * std::log(1.5) + 0.25 * std::log(0.5)).epsilon(1e-14));
  t[1] = {0.0, 1.0};
  CHECK(relative_entropy(NodeMeasure(lat, t), lat) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("density martingale, chain rule and entropy forms") {
  auto lat = testing::make_lattice(1.0, 3, 1, 1, 0.5);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto q = random_measure(lat, rng, 1.0);
    // Z is a base-measure martingale node by node.
    for (int k = 0; k < lat.steps(); ++k)
      for (std::size_t n = 0; n < lat.level_size(k); ++n) {
        double acc = 0.0;
        const auto p = lat.child_probs(k, n);
        for (int s = 0; s < lat.branching(); ++s)
          acc += p[std::size_t(s)] * q.density(k + 1, lat.child(n, s));
        CHECK(std::abs(acc / q.density(k, n) - 1.0) <= 1e-14);
      }
    const double h = relative_entropy(q, lat);
    CHECK(h > 0.0);
    auto zero = zero_discount(lat);
    CHECK(std::abs(discounted_entropy(q, zero, lat, EntropyForm::StepwiseKl) - h) <= 1e-13);
    CHECK(std::abs(discounted_entropy(q, zero, lat, EntropyForm::Riemann) - h) <= 1e-13);
  }
}

TEST_CASE("entropy forms differ at order dt under refinement") {
  std::vector<double> gaps;
  for (int K : {2, 4, 8}) {
    auto lat = testing::make_lattice(1.0, K, 1, 0);
    auto q = tilt_to_measure(GirsanovTilt{{0.5}, {}}, lat);
    auto disc = constant_discount(1.0, lat);
    gaps.push_back(std::abs(discounted_entropy(q, disc, lat, EntropyForm::Riemann) -
                            discounted_entropy(q, disc, lat, EntropyForm::StepwiseKl)));
  }
  CHECK(gaps[0] / gaps[1] == doctest::Approx(2.0).epsilon(0.25));
  CHECK(gaps[1] / gaps[2] == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("criterion examples and beta reduction") {
  auto lat = testing::make_lattice(1.0, 1, 1, 0);
  CriterionSpec spec{constant_process(0.0, lat), {0.0, 1.0}, zero_discount(lat), 1.0};
  CHECK(criterion_gamma(spec, NodeMeasure::base(lat), lat) == doctest::Approx(0.5));

  CriterionSpec b{constant_process(2.0, lat), {4.0, 4.0}, zero_discount(lat), 2.0};
  auto r = beta_reduce(b);
  CHECK(r.beta == 1.0);
  CHECK(r.cost.at(0, 0) == 1.0);
  CHECK(r.terminal[1] == 2.0);
  b.beta = 0.0;
  CHECK_THROWS_AS(beta_reduce(b), Error);

  // Zero data: Gamma is the penalty alone, zero at P.
  CriterionSpec z{constant_process(0.0, lat), {0.0, 0.0}, zero_discount(lat), 3.0};
  CHECK(criterion_gamma(z, NodeMeasure::base(lat), lat) == 0.0);
  std::mt19937_64 rng(3);
  CHECK(criterion_gamma(z, random_measure(lat, rng), lat) > 0.0);
}

TEST_CASE("expectation matches the depth-first reference") {
  auto lat = testing::make_lattice(1.0, 4, 1, 1, 0.4);
  std::mt19937_64 rng(11);
  auto q = random_measure(lat, rng);
  auto run = testing::random_process(lat, rng, -1, 1);
  auto term = testing::random_leaves(lat, rng, -2, 2);
  CHECK(std::abs(expectation(q, lat, &run.values, term) -
                 reference::expectation(q, lat, &run.values, term)) <= 1e-13);
}
