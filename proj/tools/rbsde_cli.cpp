#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rbsde/bsdej.hpp"
#include "rbsde/config.hpp"
#include "rbsde/error.hpp"
#include "rbsde/log_case.hpp"
#include "rbsde/market.hpp"
#include "rbsde/max_principle.hpp"
#include "rbsde/oracle.hpp"
#include "rbsde/parallel.hpp"
#include "rbsde/verify.hpp"

namespace fs = std::filesystem;
using namespace rbsde;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNoConvergence = 4;

struct Globals {
  std::string config;
  std::string out_dir = ".";
  int threads = -1;
  long long seed = -1;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : os_(path), path_(path) {
    if (!os_) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    os_ << header << '\n';
  }
  template <class... T>
  void row(const T&... cols) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cols), first = false), ...);
    os_ << '\n';
  }
  std::ostream& stream() { return os_; }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ofstream os_;
  fs::path path_;
};

Config load(const Globals& g) {
  Config cfg = g.config.empty() ? Config{} : load_config(g.config);
  if (g.seed >= 0) cfg.run.seed = static_cast<std::uint64_t>(g.seed);
  if (g.threads >= 0) cfg.run.threads = g.threads;
  set_thread_count(cfg.run.threads);
  fs::create_directories(g.out_dir);
  return cfg;
}

void write_solution(const fs::path& path, const BsdeSolution& sol, const Lattice& lat) {
  std::string header = "time_index,node_id,Y";
  for (int m = 1; m <= lat.brownian_dim(); ++m) header += ",Z_" + std::to_string(m);
  for (int i = 1; i <= lat.jump_channels(); ++i) header += ",y_" + std::to_string(i);
  header += ",qstar";
  Csv csv(path, header);
  for (int k = 0; k <= lat.steps(); ++k)
    for (std::size_t n = 0; n < lat.level_size(k); ++n) {
      auto& os = csv.stream();
      os << k << ',' << n << ',' << num(sol.value[static_cast<std::size_t>(k)][n]);
      for (int m = 0; m < lat.brownian_dim(); ++m)
        os << ',' << (k < lat.steps() ? num(sol.z(lat, k, n, m)) : "");
      for (int i = 0; i < lat.jump_channels(); ++i)
        os << ',' << (k < lat.steps() ? num(sol.y_jump(lat, k, n, i)) : "");
      os << ',' << num(sol.qstar.transition_prob(k, n)) << '\n';
    }
}

int cmd_solve(const Globals& g) {
  const auto cfg = load(g);
  const auto lat = make_lattice(cfg.lattice);
  const auto spec = make_criterion(cfg, lat);
  const auto dp = solve_criterion(spec, lat, Scheme::Dp);
  const auto rec = solve_criterion(spec, lat, Scheme::Recursion);
  const fs::path out(g.out_dir);
  write_solution(out / "solution_dp.csv", dp, lat);
  write_solution(out / "solution_recursion.csv", rec, lat);

  Csv s(out / "summary.csv", "label,value");
  s.row("y0_dp", dp.y0());
  s.row("y0_recursion", rec.y0());
  s.row("scheme_gap", std::abs(dp.y0() - rec.y0()));
  s.row("recursion_residual", verify_recursion_all(lat, rec));
  s.row("k_martingale_residual", verify_k_martingale(lat, rec));
  if (spec.discount.zero_mode) {
    const auto r = beta_reduce(spec);
    const auto cf = closed_form_delta0(lat, r.cost, r.terminal);
    double worst = 0.0;
    for (int k = 0; k <= lat.steps(); ++k)
      for (std::size_t n = 0; n < lat.level_size(k); ++n)
        worst = std::max(worst, std::abs(dp.value[static_cast<std::size_t>(k)][n] / spec.beta -
                                         cf.at(k, n)));
    s.row("delta0_closed_form_error", worst);
  }
  std::cout << "y0 dp " << num(dp.y0()) << " recursion " << num(rec.y0()) << "\n";
  return kExitOk;
}

int cmd_verify(const Globals& g, bool corrupt) {
  const auto cfg = load(g);
  const auto lat = make_lattice(cfg.lattice);
  VerifyOptions opt;
  opt.seed = cfg.run.seed;
  opt.samples = cfg.run.samples;
  opt.gateaux_pairs = cfg.run.gateaux_pairs;
  opt.grid_step = cfg.run.grid_step;
  opt.corrupt = corrupt;
  const auto rows = run_verify(lat, make_criterion(cfg, lat), opt);
  std::ofstream os(fs::path(g.out_dir) / "oracle_report.csv");
  write_oracle_report(os, rows);
  for (const auto& r : rows)
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " gap " << num(r.gap) << " tol "
              << num(r.tolerance) << "\n";
  if (all_pass(rows)) return kExitOk;
  std::cerr << "verify: one or more oracle checks failed (see oracle_report.csv)\n";
  return kExitNumerical;
}

struct PlanFlags {
  double x = NAN;
  std::string utility;
  std::string scheme;
  double tol = NAN;
  int max_iter = -1;
};

int cmd_optimal_plan(const Globals& g, const PlanFlags& f) {
  auto cfg = load(g);
  auto& o = cfg.optimization;
  if (!std::isnan(f.x)) o.capital = f.x;
  if (!f.utility.empty()) o.utility = o.terminal_utility = f.utility;
  if (!f.scheme.empty()) o.scheme = parse_scheme(f.scheme);
  if (!std::isnan(f.tol)) o.tol = f.tol;
  if (f.max_iter > 0) o.max_iter = f.max_iter;
  const auto lat = make_lattice(cfg.lattice);
  BudgetProblem prob{o.capital, tilt_to_measure(make_pricing_tilt(cfg, lat), lat),
                     make_discount(cfg.lattice, lat), make_utilities(o), o.scheme};
  const auto fp_opt = make_fixed_point_options(o);
  const auto sol = solve_nu(prob, lat, o.nu_tol, fp_opt);
  const auto& fp = sol.fixed_point;
  const fs::path out(g.out_dir);
  {
    Csv csv(out / "plan.csv", "time_index,node_id,c,psi");
    for (int k = 0; k <= lat.steps(); ++k)
      for (std::size_t n = 0; n < lat.level_size(k); ++n) {
        const bool leaf = k == lat.steps();
        csv.row(k, n, leaf ? std::string() : num(fp.plan.consumption.at(k, n)),
                leaf && !prob.utilities.consumption_only() ? num(fp.plan.terminal[n])
                                                           : std::string());
      }
  }
  const auto st = verify_stationarity(fp.plan, fp.solution, sol.nu, prob, lat);
  Csv s(out / "summary.csv", "label,value");
  s.row("nu", sol.nu);
  s.row("value", fp.solution.y0());
  s.row("budget", sol.budget);
  s.row("budget_error", std::abs(sol.budget - o.capital));
  s.row("stationarity_residual", st.max());
  s.row("fixed_point_iterations", fp.iterations);
  s.row("nu_evaluations", sol.evaluations);
  std::cout << "nu " << num(sol.nu) << " value " << num(fp.solution.y0()) << "\n";
  return kExitOk;
}

int cmd_log_case(const Globals& g) {
  const auto cfg = load(g);
  const auto lat = make_lattice(cfg.lattice);
  const auto& o = cfg.optimization;
  const auto sol = solve_log_case(lat, constant_rate(cfg.lattice), make_pricing_tilt(cfg, lat),
                                  o.capital, o.alpha, o.scheme, make_fixed_point_options(o),
                                  o.nu_tol);
  const fs::path out(g.out_dir);
  {
    Csv csv(out / "alpha_k.csv", "t,alpha,k");
    for (int k = 0; k <= lat.steps(); ++k)
      csv.row(lat.grid().time(k), sol.alpha[static_cast<std::size_t>(k)],
              sol.k[static_cast<std::size_t>(k)]);
  }
  {
    Csv csv(out / "J_compare.csv", "t,J_ode,J_extracted_mean,spread,dispersion");
    for (int k = 0; k <= lat.steps(); ++k) {
      const auto lk = static_cast<std::size_t>(k);
      csv.row(lat.grid().time(k), sol.J_ode[lk], sol.J_mean[lk], sol.J_spread[lk],
              sol.J_dispersion[lk]);
    }
  }
  Csv s(out / "reconstruction.csv", "label,value");
  s.row("nu", sol.nu);
  s.row("reconstruction_residual", sol.reconstruction);
  s.row("cstar_vs_plan", sol.cstar_vs_plan);
  double kcheck = 0.0;
  for (std::size_t i = 0; i < sol.alpha.size(); ++i)
    kcheck = std::max(kcheck, std::abs((1 + sol.k[i]) * (1 + sol.alpha[i]) - 1.0));
  s.row("k_alpha_identity", kcheck);
  std::cout << "nu " << num(sol.nu) << " reconstruction " << num(sol.reconstruction) << "\n";
  return kExitOk;
}

struct MarketFlags {
  std::vector<double> shares;
  double consume = 0.1;
};

int cmd_market_demo(const Globals& g, const MarketFlags& f) {
  const auto cfg = load(g);
  if (!cfg.market) throw Error(ErrorCode::ConfigError, "market-demo needs a 'market' section");
  const auto lat = make_lattice(cfg.lattice);
  const auto m = build_market(*cfg.market, lat);
  const auto premia = market_price_of_risk(m);
  const auto q = pricing_measure(premia, lat);
  const int n = m.assets();
  auto shares = f.shares;
  if (shares.empty()) shares.assign(static_cast<std::size_t>(n), 0.5);
  if (shares.size() != static_cast<std::size_t>(n))
    throw Error(ErrorCode::ConfigError, "--shares needs one entry per asset");
  std::vector<AdaptedProcess> pi;
  for (double s : shares) pi.push_back(constant_process(s, lat));
  const auto c = constant_process(f.consume, lat);
  const double x = cfg.optimization.capital;
  const auto X = wealth_path(x, pi, c, m, lat);
  const fs::path out(g.out_dir);
  {
    std::string h = "time_index,node_id";
    for (int i = 1; i <= n; ++i) h += ",S_" + std::to_string(i);
    Csv csv(out / "prices.csv", h);
    for (int k = 0; k <= lat.steps(); ++k)
      for (std::size_t node = 0; node < lat.level_size(k); ++node) {
        csv.stream() << k << ',' << node;
        for (const auto& S : m.prices) csv.stream() << ',' << num(S.at(k, node));
        csv.stream() << '\n';
      }
  }
  {
    Csv csv(out / "wealth.csv", "time_index,node_id,X");
    for (int k = 0; k <= lat.steps(); ++k)
      for (std::size_t node = 0; node < lat.level_size(k); ++node) csv.row(k, node, X.at(k, node));
  }
  Csv s(out / "risk_premia.csv", "label,value");
  for (int i = 0; i < premia.theta.size(); ++i) s.row("theta_" + std::to_string(i + 1), premia.theta(i));
  for (int j = 0; j < premia.gamma.size(); ++j) {
    s.row("gamma_" + std::to_string(j + 1), premia.gamma(j));
    s.row("z_" + std::to_string(j + 1), premia.z(j));
  }
  s.row("sigma_condition", m.condition);
  s.row("sigma_determinant", m.determinant);
  const auto res = martingale_residual(m, q, lat);
  for (int i = 0; i < n; ++i) s.row("martingale_residual_" + std::to_string(i + 1), res[static_cast<std::size_t>(i)]);
  s.row("budget_gap", budget_gap(x, c, X, q, lat));
  const auto adm = check_admissible(X);
  s.row("admissible", adm.ok ? 1 : 0);
  if (!adm.ok) {
    s.row("first_violation_time_index", adm.level);
    s.row("first_violation_node", adm.node);
  }
  std::cout << "condition " << num(m.condition) << " admissible " << (adm.ok ? "yes" : "no") << "\n";
  return kExitOk;
}

int cmd_convergence(const Globals& g, std::vector<int> refinements) {
  const auto cfg = load(g);
  if (refinements.empty()) refinements = cfg.run.refinements;
  if (refinements.empty()) throw Error(ErrorCode::ConfigError, "empty refinement list");
  for (std::size_t i = 1; i < refinements.size(); ++i)
    if (refinements[i] != 2 * refinements[i - 1])
      throw Error(ErrorCode::ConfigError,
                  "refinements must halve the step: each entry must double the previous one");
  double rate = 0.0;
  bool constant = true;
  try {
    rate = constant_rate(cfg.lattice);
  } catch (const Error&) {
    constant = false;
  }

  Csv csv(fs::path(g.out_dir) / "convergence.csv", "quantity,delta,value,gap,ratio");
  struct Series {
    std::string name;
    std::vector<std::tuple<double, double, double>> rows;
  };
  std::vector<Series> series{{"scheme_gap", {}}, {"dp_recursion_residual", {}},
                             {"implied_tilt_error", {}}, {"log_case_J_spread", {}},
                             {"log_case_J_dispersion", {}}};
  for (int K : refinements) {
    const auto lat = make_lattice(cfg.lattice, K);
    const auto spec = make_criterion(cfg, lat);
    const auto dp = solve_criterion(spec, lat, Scheme::Dp);
    const auto rec = solve_criterion(spec, lat, Scheme::Recursion);
    const double dt = lat.dt();
    series[0].rows.emplace_back(dt, dp.y0(), std::abs(dp.y0() - rec.y0()));
    series[1].rows.emplace_back(dt, dp.y0(), verify_recursion_all(lat, dp));
    const auto t = implied_tilt(dp, lat, 0, 0);
    double terr = 0.0;
    for (int m = 0; m < lat.brownian_dim(); ++m)
      terr = std::max(terr, std::abs(t.drift[static_cast<std::size_t>(m)] + dp.z(lat, 0, 0, m)));
    for (int i = 0; i < lat.jump_channels(); ++i)
      terr = std::max(terr, std::abs(t.intensity_ratio[static_cast<std::size_t>(i)] -
                                     std::exp(-dp.y_jump(lat, 0, 0, i))));
    series[2].rows.emplace_back(dt, dp.y0(), terr);
    if (constant) {
      const auto& o = cfg.optimization;
      const auto lc = solve_log_case(lat, rate, make_pricing_tilt(cfg, lat), o.capital, o.alpha,
                                     o.scheme, make_fixed_point_options(o), o.nu_tol);
      const double spread = *std::max_element(lc.J_spread.begin(), lc.J_spread.end());
      const double disp = *std::max_element(lc.J_dispersion.begin(), lc.J_dispersion.end());
      series[3].rows.emplace_back(dt, lc.J_mean[0], spread);
      series[4].rows.emplace_back(dt, lc.J_mean[0], disp);
    }
  }
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      const auto [dt, value, gap] = s.rows[i];
      std::string ratio;
      if (i > 0 && gap != 0.0) ratio = num(std::get<2>(s.rows[i - 1]) / gap);
      csv.row(s.name, dt, value, gap, ratio);
    }
  std::cout << "wrote " << (fs::path(g.out_dir) / "convergence.csv").string() << "\n";
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IntensityTooLarge:
    case ErrorCode::DegenerateLattice:
    case ErrorCode::LatticeTooLarge:
    case ErrorCode::LatticeMismatch:
    case ErrorCode::NegativeRate:
    case ErrorCode::ZeroRateWithoutFlag:
    case ErrorCode::NonpositiveBeta:
    case ErrorCode::NonpositiveCapital:
    case ErrorCode::BadJumpSize:
    case ErrorCode::TreeTooLarge:
    case ErrorCode::DimensionTooLarge:
      return kExitConfig;
    case ErrorCode::NoConvergence:
    case ErrorCode::BracketFailure:
      return kExitNoConvergence;
    default:
      return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream defaults;
  write_default_config(defaults);
  CLI::App app{"Entropy-penalized robust utility on jump-diffusion lattices"};
  app.footer("Config defaults (JSON):\n" + defaults.str() +
             "\nExit codes: 0 ok, 2 config, 3 numerical, 4 non-convergence.");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config file (defaults below when omitted)");
  app.add_option("--out-dir", g.out_dir, "Directory for CSV outputs")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default, 1 = serial)");
  app.add_option("--seed", g.seed, "Overrides run.seed");

  std::function<int()> action;
  auto* solve = app.add_subcommand("solve", "Solve the BSDE under both schemes");
  solve->callback([&] { action = [&] { return cmd_solve(g); }; });

  bool corrupt = false;
  auto* verify = app.add_subcommand("verify", "Run the brute-force oracle suite (steps <= 3)");
  verify->add_flag("--corrupt-solver", corrupt, "Negative control: perturb solver values");
  verify->callback([&] { action = [&] { return cmd_verify(g, corrupt); }; });

  PlanFlags pf;
  auto* plan = app.add_subcommand("optimal-plan", "Solve the maximum principle for (c, psi)");
  plan->add_option("--x", pf.x, "Initial capital (optimization.capital)");
  plan->add_option("--utility", pf.utility, "log | power:<gamma>, used for c and psi");
  plan->add_option("--scheme", pf.scheme, "dp | recursion");
  plan->add_option("--tol", pf.tol, "Fixed-point tolerance (default 1e-10)");
  plan->add_option("--max-iter", pf.max_iter, "Fixed-point iteration cap (default 500)");
  plan->callback([&] { action = [&] { return cmd_optimal_plan(g, pf); }; });

  auto* log = app.add_subcommand("log-case", "Log-utility consumption closed form");
  log->callback([&] { action = [&] { return cmd_log_case(g); }; });

  MarketFlags mf;
  auto* market = app.add_subcommand("market-demo", "Prices, premia and a wealth path");
  market->add_option("--shares", mf.shares, "Constant shares per asset (default 0.5 each)");
  market->add_option("--consume", mf.consume, "Constant consumption rate")->capture_default_str();
  market->callback([&] { action = [&] { return cmd_market_demo(g, mf); }; });

  std::vector<int> refinements;
  auto* conv = app.add_subcommand("convergence", "Refinement study, halving the step");
  conv->add_option("--refinements", refinements, "Step counts, each double the previous");
  conv->callback([&] { action = [&] { return cmd_convergence(g, refinements); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  try {
    return action();
  } catch (const NoConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
