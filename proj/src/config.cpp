#include "rbsde/config.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rbsde/error.hpp"
#include "rbsde/expression.hpp"

namespace rbsde {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) bad(where, "unknown key '" + k + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

// Number or expression string, stored as text.
std::string expr(const json& j, const std::string& where) {
  if (j.is_number()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
    return buf;
  }
  if (j.is_string()) return j.get<std::string>();
  bad(where, "expected a number or an expression string");
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

template <class T, class F>
void maybe(const json& j, const char* key, T& field, F&& convert, const std::string& where) {
  if (j.contains(key)) field = convert(j.at(key), where + "." + key);
}

Expression compile(const std::string& s, const Lattice& lattice) {
  return Expression::parse(s, lattice.brownian_dim(), lattice.jump_channels());
}

}  // namespace

Config parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    bad("config", std::string("invalid JSON: ") + e.what());
  }
  only_keys(root, "config", {"lattice", "criterion", "market", "optimization", "run"});
  Config cfg;

  if (root.contains("lattice")) {
    const auto& j = root["lattice"];
    only_keys(j, "lattice", {"horizon", "steps", "brownian_dim", "jump_channels", "discount"});
    auto& l = cfg.lattice;
    maybe(j, "horizon", l.horizon, number, "lattice");
    maybe(j, "steps", l.steps, integer, "lattice");
    maybe(j, "brownian_dim", l.brownian_dim, integer, "lattice");
    maybe(j, "discount", l.discount, expr, "lattice");
    if (j.contains("jump_channels")) {
      const auto& ch = j["jump_channels"];
      if (!ch.is_array()) bad("lattice.jump_channels", "expected an array");
      for (std::size_t i = 0; i < ch.size(); ++i) {
        const std::string w = "lattice.jump_channels[" + std::to_string(i) + "]";
        only_keys(ch[i], w, {"intensity"});
        if (!ch[i].contains("intensity")) bad(w, "missing 'intensity'");
        l.intensities.push_back(expr(ch[i]["intensity"], w + ".intensity"));
      }
    }
    if (l.horizon <= 0.0) bad("lattice.horizon", "must be positive");
    if (l.steps < 1) bad("lattice.steps", "must be at least 1");
    if (l.brownian_dim < 0) bad("lattice.brownian_dim", "must be nonnegative");
  }

  if (root.contains("criterion")) {
    const auto& j = root["criterion"];
    only_keys(j, "criterion", {"running", "terminal", "beta"});
    maybe(j, "running", cfg.criterion.running, expr, "criterion");
    maybe(j, "terminal", cfg.criterion.terminal, expr, "criterion");
    maybe(j, "beta", cfg.criterion.beta, number, "criterion");
    if (cfg.criterion.beta <= 0.0) bad("criterion.beta", "must be positive");
  }

  if (root.contains("market")) {
    const auto& j = root["market"];
    only_keys(j, "market", {"mu", "sigma", "phi", "lambda", "s0"});
    MarketInputs m;
    maybe(j, "mu", m.mu, numbers, "market");
    maybe(j, "sigma", m.sigma, numbers, "market");
    maybe(j, "phi", m.phi, numbers, "market");
    maybe(j, "lambda", m.lambda, numbers, "market");
    maybe(j, "s0", m.s0, numbers, "market");
    cfg.market = m;
  }

  if (root.contains("optimization")) {
    const auto& j = root["optimization"];
    only_keys(j, "optimization", {"capital", "utility", "terminal_utility", "scheme", "nu_tol",
                                  "tol", "max_iter", "damping", "pricing", "alpha"});
    auto& o = cfg.optimization;
    maybe(j, "capital", o.capital, number, "optimization");
    maybe(j, "utility", o.utility, text, "optimization");
    maybe(j, "terminal_utility", o.terminal_utility, text, "optimization");
    maybe(j, "nu_tol", o.nu_tol, number, "optimization");
    maybe(j, "tol", o.tol, number, "optimization");
    maybe(j, "max_iter", o.max_iter, integer, "optimization");
    maybe(j, "damping", o.damping, number, "optimization");
    if (j.contains("scheme")) o.scheme = parse_scheme(text(j["scheme"], "optimization.scheme"));
    if (j.contains("alpha"))
      o.alpha = parse_alpha_method(text(j["alpha"], "optimization.alpha"));
    if (j.contains("pricing")) {
      const auto& pj = j["pricing"];
      only_keys(pj, "optimization.pricing", {"theta", "z"});
      GirsanovTilt t;
      maybe(pj, "theta", t.theta, numbers, "optimization.pricing");
      maybe(pj, "z", t.z, numbers, "optimization.pricing");
      o.pricing = t;
    }
    if (o.damping <= 0.0 || o.damping > 1.0) bad("optimization.damping", "must lie in (0, 1]");
  }

  if (root.contains("run")) {
    const auto& j = root["run"];
    only_keys(j, "run", {"seed", "threads", "samples", "gateaux_pairs", "grid_step", "refinements"});
    auto& r = cfg.run;
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned()) bad("run.seed", "expected a nonnegative integer");
      r.seed = j["seed"].get<std::uint64_t>();
    }
    maybe(j, "threads", r.threads, integer, "run");
    maybe(j, "samples", r.samples, integer, "run");
    maybe(j, "gateaux_pairs", r.gateaux_pairs, integer, "run");
    maybe(j, "grid_step", r.grid_step, number, "run");
    if (j.contains("refinements")) {
      r.refinements.clear();
      for (double v : numbers(j["refinements"], "run.refinements"))
        r.refinements.push_back(static_cast<int>(v));
    }
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_default_config(std::ostream& os) {
  const Config c;
  json j;
  j["lattice"] = {{"horizon", c.lattice.horizon},
                  {"steps", c.lattice.steps},
                  {"brownian_dim", c.lattice.brownian_dim},
                  {"jump_channels", json::array({{{"intensity", 0.3}}})},
                  {"discount", c.lattice.discount}};
  j["criterion"] = {{"running", c.criterion.running},
                    {"terminal", c.criterion.terminal},
                    {"beta", c.criterion.beta}};
  j["market"] = {{"mu", {0.05, 0.02}}, {"sigma", {0.2, 0.1}}, {"phi", {0.5, -0.2}}};
  const auto& o = c.optimization;
  j["optimization"] = {{"capital", o.capital},     {"utility", o.utility},
                       {"terminal_utility", o.terminal_utility},
                       {"scheme", std::string(to_string(o.scheme))},
                       {"nu_tol", o.nu_tol},       {"tol", o.tol},
                       {"max_iter", o.max_iter},   {"damping", o.damping},
                       {"alpha", "exponential"}};
  const auto& r = c.run;
  j["run"] = {{"seed", r.seed},         {"threads", r.threads},
              {"samples", r.samples},   {"gateaux_pairs", r.gateaux_pairs},
              {"grid_step", r.grid_step}, {"refinements", r.refinements}};
  os << j.dump(2) << "\n";
}

Lattice make_lattice(const LatticeConfig& cfg, int steps) {
  const int d = static_cast<int>(cfg.intensities.size());
  std::vector<Expression> rates;
  for (const auto& s : cfg.intensities) {
    // Time and jump counts only.
    rates.push_back(Expression::parse(s, 0, d));
  }
  LatticeOptions opt;
  opt.single_path = cfg.brownian_dim == 0 && d == 0;
  IntensityFn fn = [rates](const NodeState& s) {
    std::vector<double> out;
    for (const auto& r : rates) out.push_back(r(s));
    return out;
  };
  return build_lattice(TimeGrid(cfg.horizon, steps < 0 ? cfg.steps : steps), cfg.brownian_dim, d,
                       fn, opt);
}

DiscountSpec make_discount(const LatticeConfig& cfg, const Lattice& lattice) {
  if (cfg.discount == "zero") return zero_discount(lattice);
  const auto e = compile(cfg.discount, lattice);
  return discount_process(adapted_from_fn([&](const NodeState& s) { return e(s); }, lattice),
                          lattice);
}

double constant_rate(const LatticeConfig& cfg) {
  if (cfg.discount == "zero") return 0.0;
  const auto e = Expression::parse(cfg.discount, cfg.brownian_dim,
                                   static_cast<int>(cfg.intensities.size()));
  if (!e.is_constant()) bad("lattice.discount", "a constant rate is required here");
  return e(NodeState{});
}

CriterionSpec make_criterion(const Config& cfg, const Lattice& lattice) {
  const auto run = compile(cfg.criterion.running, lattice);
  const auto term = compile(cfg.criterion.terminal, lattice);
  CriterionSpec spec;
  spec.cost = adapted_from_fn([&](const NodeState& s) { return run(s); }, lattice);
  spec.terminal = leaves(terminal_from_fn([&](const NodeState& s) { return term(s); }, lattice));
  spec.discount = make_discount(cfg.lattice, lattice);
  spec.beta = cfg.criterion.beta;
  return spec;
}

UtilitySpec make_utilities(const OptimizationConfig& cfg) {
  return {Utility::parse(cfg.utility), Utility::parse(cfg.terminal_utility)};
}

GirsanovTilt make_pricing_tilt(const Config& cfg, const Lattice& lattice) {
  if (cfg.optimization.pricing) {
    auto t = *cfg.optimization.pricing;
    if (t.theta.empty()) t.theta.assign(static_cast<std::size_t>(lattice.brownian_dim()), 0.0);
    if (t.z.empty()) t.z.assign(static_cast<std::size_t>(lattice.jump_channels()), 0.0);
    if (t.theta.size() != static_cast<std::size_t>(lattice.brownian_dim()) ||
        t.z.size() != static_cast<std::size_t>(lattice.jump_channels()))
      bad("optimization.pricing", "theta needs brownian_dim and z needs one entry per channel");
    return t;
  }
  if (cfg.market) return market_price_of_risk(build_market(*cfg.market, lattice)).tilt();
  return {std::vector<double>(static_cast<std::size_t>(lattice.brownian_dim()), 0.0),
          std::vector<double>(static_cast<std::size_t>(lattice.jump_channels()), 0.0)};
}

FixedPointOptions make_fixed_point_options(const OptimizationConfig& cfg) {
  FixedPointOptions o;
  o.damping = cfg.damping;
  o.tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  return o;
}

}  // namespace rbsde
