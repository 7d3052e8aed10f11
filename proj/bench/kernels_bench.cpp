// Serial reference against OpenMP for each trial-level kernel. Prints one
// row per kernel with the best wall time of --reps runs.

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "qrke/kernels.hpp"
#include "qrke/protocol.hpp"
#include "qrke/rng.hpp"
#include "qrke/suite.hpp"

using namespace qrke;

namespace {

double best_seconds(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

void row(const char* name, std::size_t items, int reps, const std::function<void()>& serial,
         const std::function<void()>& parallel) {
  const double s = best_seconds(reps, serial);
  const double p = best_seconds(reps, parallel);
  std::printf("%-20s %10zu %12.4f %12.4f %8.2f\n", name, items, s, p, s / p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Kernel benchmark: serial vs OpenMP", "qrke_bench");
  int reps = 3;
  std::size_t scale = 1;
  std::uint64_t seed = 1;
  app.add_option("--reps", reps, "Runs per kernel, best is kept")->capture_default_str();
  app.add_option("--scale", scale, "Workload multiplier")->capture_default_str();
  app.add_option("--seed", seed, "Generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  SeededRng rng(seed);
  const NamedSuite small = resolve_suite("4-2", 128, std::nullopt);
  const NamedSuite wide = resolve_suite("64-4", 128, std::nullopt);
  const PrecisionCtx ctx = small.suite.ctx();
  const auto& fs = small.suite.functions;

  std::vector<strategy::Combination> draws;
  for (std::size_t i = 0; i < 20'000 * scale; ++i) {
    draws.push_back(strategy::draw_repetitions(wide.suite.functions, rng));
  }

  const strategy::SecretConfig secret_cfg = protocol::SessionConfig::for_suite(small).secret;
  std::vector<chebyshev::ChainSpec> chains;
  std::vector<Real> xs;
  for (std::size_t i = 0; i < 400 * scale; ++i) {
    chains.push_back(strategy::chain_of(strategy::draw_secret(fs, secret_cfg, rng)));
    xs.push_back(protocol::pick_public_x(ctx, rng));
  }

  const Real x = protocol::pick_public_x(ctx, rng);
  const auto planted = strategy::draw_secret(fs, secret_cfg, rng);
  const Real y = strategy::evaluate_secret(planted, x, ctx);
  const std::uint64_t total = strategy::combination_count(fs).get_ui();

  std::vector<BigInt> candidates;
  for (std::size_t i = 0; i < 2'000 * scale; ++i) {
    candidates.push_back(rng.uniform(BigInt(1'000'000'000)));
  }

  std::vector<Real> values;
  for (std::size_t i = 0; i < 20'000 * scale; ++i) {
    values.push_back(protocol::pick_public_x(ctx, rng));
  }

  std::printf("threads %d\n", omp_get_max_threads());
  std::printf("%-20s %10s %12s %12s %8s\n", "kernel", "items", "serial_s", "omp_s", "speedup");
  row("log10_exponents", draws.size(), reps,
      [&] { (void)kernels::serial::log10_exponents(draws); },
      [&] { (void)kernels::omp::log10_exponents(draws); });
  row("evaluate_chains", chains.size(), reps,
      [&] { (void)kernels::serial::evaluate_chains(chains, xs, ctx); },
      [&] { (void)kernels::omp::evaluate_chains(chains, xs, ctx); });
  row("brute_force_scan", total, reps,
      [&] { (void)kernels::serial::brute_force_scan(fs, x, y, ctx, 0, total); },
      [&] { (void)kernels::omp::brute_force_scan(fs, x, y, ctx, 0, total); });
  row("verify_candidates", candidates.size(), reps,
      [&] { (void)kernels::serial::verify_candidates(candidates, x, y, ctx); },
      [&] { (void)kernels::omp::verify_candidates(candidates, x, y, ctx); });
  row("digit_counts", values.size(), reps,
      [&] { (void)kernels::serial::digit_counts(values, 40); },
      [&] { (void)kernels::omp::digit_counts(values, 40); });
  return 0;
}
