#include <chrono>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rbsde/config.hpp"
#include "rbsde/error.hpp"
#include "rbsde/expression.hpp"
#include "rbsde/verify.hpp"

using namespace rbsde;

namespace {

ErrorCode code_of(const auto& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("expressions") {
  std::vector<double> w{0.5, -1.0};
  std::vector<int> n{2};
  NodeState s{1, 0, 0.25, w, n};
  auto ev = [&](const char* e) { return Expression::parse(e, 2, 1)(s); };
  CHECK(ev("1 + 2 * 3") == 7.0);
  CHECK(ev("-2^2") == -4.0);
  CHECK(ev("2^3^2") == 512.0);
  CHECK(ev("(1 + 2) * 3") == 9.0);
  CHECK(ev("t * 4") == 1.0);
  CHECK(ev("W1 - W2 + N1") == 3.5);
  CHECK(ev("max(W1, W2) + min(1, 2)") == 1.5);
  CHECK(ev("exp(log(3))") == doctest::Approx(3.0));
  CHECK(ev("sqrt(abs(-16)) / 2") == 2.0);
  CHECK(ev("1e-1 * 10") == doctest::Approx(1.0));
  CHECK(Expression::parse("0.3 + exp(1)", 0, 0).is_constant());
  CHECK_FALSE(Expression::parse("0.3 * t", 0, 0).is_constant());
  for (const char* bad : {"W3", "N2", "foo(1)", "1 +", "(1", "1 2", "exp 1", "max(1)"})
    CHECK(code_of([&] { Expression::parse(bad, 2, 1); }) == ErrorCode::ConfigError);
}

TEST_CASE("config parsing") {
  auto cfg = parse_config(R"({
    "lattice": {"horizon": 2, "steps": 2, "brownian_dim": 1,
                "jump_channels": [{"intensity": "0.2 + 0.1 * N1"}], "discount": "zero"},
    "criterion": {"running": "W1", "terminal": 1.5, "beta": 2},
    "optimization": {"scheme": "recursion", "pricing": {"theta": [0.1], "z": [0.2]}},
    "run": {"seed": 3, "refinements": [2, 4]}
  })");
  CHECK(cfg.lattice.horizon == 2.0);
  CHECK(cfg.optimization.scheme == Scheme::Recursion);
  CHECK(cfg.run.seed == 3);
  auto lat = make_lattice(cfg.lattice);
  CHECK(lat.branching() == 4);
  CHECK_FALSE(lat.deterministic_intensities());
  CHECK(make_discount(cfg.lattice, lat).zero_mode);
  auto spec = make_criterion(cfg, lat);
  CHECK(spec.beta == 2.0);
  CHECK(spec.terminal.front() == 1.5);
  CHECK(make_pricing_tilt(cfg, lat).z[0] == 0.2);
  CHECK(make_lattice(cfg.lattice, 1).steps() == 1);

  CHECK(code_of([] { parse_config(R"({"latice": {}})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config(R"({"lattice": {"steps": "x"}})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("{"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config(R"({"optimization": {"scheme": "euler"}})"); }) ==
        ErrorCode::ConfigError);
  auto heavy = parse_config(R"({"lattice": {"steps": 1, "jump_channels": [{"intensity": 2}]}})");
  CHECK(code_of([&] { make_lattice(heavy.lattice); }) == ErrorCode::IntensityTooLarge);
  auto wdep = parse_config(R"({"lattice": {"jump_channels": [{"intensity": "W1"}]}})");
  CHECK(code_of([&] { make_lattice(wdep.lattice); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { constant_rate(parse_config(R"({"lattice": {"discount": "t"}})").lattice); }) ==
        ErrorCode::ConfigError);

  std::ostringstream os;
  write_default_config(os);
  auto round = parse_config(os.str());
  CHECK(round.lattice.intensities.size() == 1);
  CHECK(round.market.has_value());
}

TEST_CASE("market premia feed the pricing tilt") {
  auto cfg = parse_config(R"({
    "lattice": {"steps": 2, "jump_channels": [{"intensity": 0.3}]},
    "market": {"mu": [0.05, 0.02], "sigma": [0.2, 0.1], "phi": [0.5, -0.2]}
  })");
  auto lat = make_lattice(cfg.lattice);
  auto t = make_pricing_tilt(cfg, lat);
  auto m = market_price_of_risk(build_market(*cfg.market, lat));
  CHECK(t.theta[0] == m.theta(0));
  CHECK(t.z[0] == m.z(0));
}

TEST_CASE("verify suite") {
  auto cfg = parse_config(R"({"lattice": {"steps": 2, "jump_channels": [{"intensity": 0.3}]}})");
  auto lat = make_lattice(cfg.lattice);
  auto spec = make_criterion(cfg, lat);
  VerifyOptions opt;
  opt.samples = 20;
  opt.gateaux_pairs = 5;
  auto rows = run_verify(lat, spec, opt);
  for (const auto& r : rows) {
    INFO(r.name << " gap " << r.gap);
    CHECK(r.pass);
  }
  CHECK(all_pass(rows));

  opt.corrupt = true;
  auto bad = run_verify(lat, spec, opt);
  CHECK_FALSE(all_pass(bad));
  auto row = std::find_if(bad.begin(), bad.end(), [](auto& r) { return r.name == "duality_qstar"; });
  CHECK_FALSE(row->pass);

  auto big = make_lattice(cfg.lattice, 4);
  CHECK(code_of([&] { run_verify(big, make_criterion(cfg, big), opt); }) == ErrorCode::TreeTooLarge);
}
