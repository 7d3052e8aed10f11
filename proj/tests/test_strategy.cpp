#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "qrke/error.hpp"
#include "qrke/strategy.hpp"

using namespace qrke;
using namespace qrke::strategy;

namespace {

std::vector<std::uint32_t> trial_division_primes(std::size_t count) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t n = 2; out.size() < count; ++n) {
    bool prime = true;
    for (std::uint32_t d = 2; d * d <= n; ++d) {
      prime = prime && n % d != 0;
    }
    if (prime) {
      out.push_back(n);
    }
  }
  return out;
}

BigInt binomial(std::uint64_t n, std::uint64_t k) {
  BigInt out = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    out = out * BigInt(static_cast<unsigned long>(n - k + i)) / BigInt(static_cast<unsigned long>(i));
  }
  return out;
}

}  // namespace

TEST_CASE("prime table matches trial division") {
  CHECK(first_primes(200) == trial_division_primes(200));
  CHECK(is_prime(7919));
  CHECK_FALSE(is_prime(7917));
  CHECK_FALSE(is_prime(1));
}

TEST_CASE("function set validation") {
  CHECK_THROWS_AS(FunctionSet({2, 4}, {2, 2}, 2), ParameterError);
  CHECK_THROWS_AS(FunctionSet({2, 2}, {2, 2}, 2), ParameterError);
  CHECK_THROWS_AS(FunctionSet({2, 3}, {2}, 2), ParameterError);
  CHECK_THROWS_AS(FunctionSet({2, 3}, {2, 0}, 2), ParameterError);
  CHECK_THROWS_AS(FunctionSet({2, 3}, {2, 2}, 1), ParameterError);
  const FunctionSet fs({2, 3, 5}, {2, 3, 1}, 10);
  CHECK(fs.d_max() == BigInt(2 * 2 * 3 * 3 * 3 * 5));
}

TEST_CASE("generated sets draw distinct primes from the pool") {
  SeededRng rng(5);
  const auto pool = first_primes(32);
  for (int i = 0; i < 20; ++i) {
    const FunctionSet fs = gen_function_set(8, 32, rng, 3);
    CHECK(fs.size() == 8);
    CHECK(std::set(fs.primes().begin(), fs.primes().end()).size() == 8);
    CHECK(std::is_sorted(fs.primes().begin(), fs.primes().end()));
    for (auto p : fs.primes()) {
      CHECK(std::find(pool.begin(), pool.end(), p) != pool.end());
    }
  }
  CHECK_THROWS_AS(gen_function_set(9, 8, rng), ParameterError);
}

TEST_CASE("counts") {
  CHECK(combination_count(FunctionSet::first_primes_uniform(4, 2)) == 16);
  CHECK(combination_count(FunctionSet::first_primes_uniform(128, 2)) == big_pow(2, 128));
  CHECK(combination_count(FunctionSet::first_primes_uniform(64, 4)) == big_pow(2, 128));
  // 8^32 = 2^96; the 32/8 set does not reach 2^128.
  CHECK(combination_count(FunctionSet::first_primes_uniform(32, 8)) == big_pow(2, 96));
  CHECK_THROWS_AS(casket_count(5, 0), ParameterError);
  for (std::uint64_t n = 1; n < 30; ++n) {
    for (std::uint64_t r = 1; r < 12; ++r) {
      CHECK(casket_count(n, r) == binomial(n + r - 1, r));
    }
  }
}

TEST_CASE("repetition draws are uniform per coordinate") {
  SeededRng rng(9);
  const FunctionSet fs = FunctionSet::first_primes_uniform(3, 4);
  std::map<std::uint32_t, int> counts;
  for (int i = 0; i < 8000; ++i) {
    const auto c = draw_repetitions(fs, rng);
    REQUIRE(c.reps.size() == 3);
    CHECK(c.primes == fs.primes());
    for (auto v : c.reps) {
      CHECK(v < 4);
    }
    ++counts[c.reps[1]];
  }
  for (auto [v, n] : counts) {
    CHECK(std::abs(n - 2000) < 200);
  }
}

TEST_CASE("draw_secret honours the floor and the strategy") {
  SeededRng rng(3);
  const FunctionSet fs = FunctionSet::first_primes_uniform(64, 4);
  SecretConfig cfg;
  for (int i = 0; i < 50; ++i) {
    const auto sel = draw_secret(fs, cfg, rng);
    CHECK(exponent_of(sel).value() >= default_exponent_floor());
    CHECK(raw_exponent(sel) <= max_exponent(fs, cfg));
    CHECK(chain_of(sel).degree() == raw_exponent(sel));
  }
  cfg.strategy = Strategy::casket;
  cfg.casket_size = 20;
  for (int i = 0; i < 20; ++i) {
    const auto sel = draw_secret(fs, cfg, rng);
    const auto& picks = std::get<Casket>(sel).picks;
    CHECK(picks.size() == 20);
    CHECK(std::is_sorted(picks.begin(), picks.end()));
    CHECK(raw_exponent(sel) >= cfg.floor);
  }
  cfg.strategy = Strategy::analytic;
  for (int i = 0; i < 20; ++i) {
    const auto sel = draw_secret(fs, cfg, rng);
    const auto len = decimal_length(std::get<Analytic>(sel).n);
    CHECK(len >= cfg.analytic_min_digits);
    CHECK(len <= cfg.analytic_max_digits);
    CHECK_THROWS_AS(chain_of(sel), DomainError);
  }
  SecretConfig impossible;
  impossible.floor = pow10(40);
  CHECK_THROWS_AS(draw_secret(FunctionSet::first_primes_uniform(4, 2), impossible, rng),
                  ParameterError);
}

TEST_CASE("required precision is ceil(log10 d_max) + shared + 10") {
  for (auto [n, w] : {std::pair{4u, 2u}, std::pair{32u, 8u}, std::pair{64u, 4u}}) {
    const FunctionSet fs = FunctionSet::first_primes_uniform(n, w);
    BigInt d = 1;
    for (auto p : fs.primes()) {
      d *= big_pow(p, w);
    }
    const int ceil_log = static_cast<int>(decimal_length(d - 1));
    CHECK(required_precision(fs, 128) == ceil_log + 50 + 10);
    CHECK(required_precision(fs, 256) == ceil_log + 90 + 10);
  }
  CHECK(shared_digit_requirement(128) == 50);
  CHECK_THROWS_AS(shared_digit_requirement(192), ParameterError);
  const FunctionSet fs = FunctionSet::first_primes_uniform(64, 4);
  CHECK_NOTHROW(check_fits(fs, SecretConfig{}, required_precision(fs, 128), 128));
  CHECK_THROWS_AS(check_fits(fs, SecretConfig{}, 300, 128), ParameterError);
}

TEST_CASE("magnitude distribution matches the analytic moments") {
  const FunctionSet fs = FunctionSet::first_primes_uniform(64, 4);
  double mean = 0.0;
  double var = 0.0;
  for (auto p : fs.primes()) {
    const double l = std::log10(static_cast<double>(p));
    mean += 1.5 * l;            // E[v] for v uniform on {0,1,2,3}
    var += 1.25 * l * l;        // Var[v]
  }
  CHECK(expected_log10_mean(fs) == doctest::Approx(mean).epsilon(1e-12));
  CHECK(expected_log10_stddev(fs) == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  SeededRng rng(4);
  const auto dist = simulate_magnitude_distribution(fs, 5000, rng);
  CHECK(dist.trials == 5000);
  CHECK(std::abs(dist.mean - mean) < 4 * std::sqrt(var / 5000));
  std::uint64_t total = 0;
  for (auto c : dist.histogram.counts) {
    total += c;
  }
  CHECK(total == 5000);
}
