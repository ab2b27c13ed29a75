#include <chrono>
#include <cstdio>
#include <random>

#include "CLI11.hpp"
#include "rbsde/bsdej.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/parallel.hpp"
#include "rbsde/reference.hpp"

using namespace rbsde;

namespace {

template <class F>
double best_ms(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Times the parallel, serial and depth-first backward solvers"};
  int p = 1, d = 1, reps = 3, threads = 0;
  std::vector<int> steps{6, 8, 10};
  app.add_option("--brownian-dim", p)->capture_default_str();
  app.add_option("--jump-channels", d)->capture_default_str();
  app.add_option("--steps", steps, "Tree depths to time")->capture_default_str();
  app.add_option("--reps", reps, "Repetitions (best time reported)")->capture_default_str();
  app.add_option("--threads", threads, "OpenMP threads, 0 = runtime default");
  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  std::printf("steps,leaves,threads,parallel_ms,serial_ms,dfs_ms,max_diff\n");
  for (int K : steps) {
    const auto lat = build_lattice(TimeGrid(1.0, K), p, d,
                                   constant_intensity(std::vector<double>(std::size_t(d), 0.3)));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto cost = constant_process(0.0, lat);
    for (auto& s : cost.values)
      for (auto& v : s) v = u(rng);
    std::vector<double> term(lat.leaf_count());
    for (auto& v : term) v = u(rng);
    const auto disc = constant_discount(0.1, lat);

    BsdeSolution par;
    NodeValues ser, dfs;
    const double tp = best_ms(reps, [&] { par = solve_bsdej(lat, cost, term, disc); });
    const double ts = best_ms(reps, [&] {
      ser = reference::solve_values_serial(lat, cost, term, disc, Scheme::Dp);
    });
    const double td = best_ms(reps, [&] {
      dfs = reference::solve_values(lat, cost, term, disc, Scheme::Dp);
    });
    double diff = 0.0;
    for (std::size_t k = 0; k < ser.size(); ++k)
      for (std::size_t n = 0; n < ser[k].size(); ++n)
        diff = std::max({diff, std::abs(par.value[k][n] - ser[k][n]),
                         std::abs(par.value[k][n] - dfs[k][n])});
    std::printf("%d,%zu,%d,%.3f,%.3f,%.3f,%.3g\n", K, lat.leaf_count(), thread_count(), tp, ts,
                td, diff);
  }
}
