#include <doctest.h>

#include <sstream>

#include "qrke/attack.hpp"
#include "qrke/chebyshev.hpp"
#include "qrke/error.hpp"
#include "qrke/protocol.hpp"

using namespace qrke;
using namespace qrke::attack;

namespace {

std::vector<BigInt> scan(long a, long b, long m) {
  std::vector<BigInt> out;
  for (long k = 0; k < m; ++k) {
    if (((a * k - b) % m + m) % m == 0) {
      out.emplace_back(k);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("extended gcd satisfies Bezout") {
  SeededRng rng(41);
  for (int i = 0; i < 500; ++i) {
    const BigInt a = rng.uniform(pow10(30)) - pow10(29);
    const BigInt b = rng.uniform(pow10(20)) + 1;
    BigInt s;
    BigInt t;
    const BigInt g = extended_gcd(a, b, s, t);
    BigInt expect;
    mpz_gcd(expect.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    CHECK(g == expect);
    CHECK(a * s + b * t == g);
  }
}

TEST_CASE("modular solver equals an exhaustive scan") {
  SeededRng rng(42);
  for (int i = 0; i < 300; ++i) {
    const long m = 2 + static_cast<long>(rng.uniform(3000));
    const long a = static_cast<long>(rng.uniform(static_cast<std::uint64_t>(4 * m))) - 2 * m;
    const long b = static_cast<long>(rng.uniform(static_cast<std::uint64_t>(4 * m))) - 2 * m;
    CHECK(solve_modular_linear(BigInt(a), BigInt(b), BigInt(m)) == scan(a, b, m));
  }
  CHECK(solve_modular_linear(BigInt(6), BigInt(4), BigInt(8)) == std::vector<BigInt>{2, 6});
  CHECK(solve_modular_linear(BigInt(6), BigInt(3), BigInt(8)).empty());
  CHECK(solve_modular_linear(BigInt(0), BigInt(0), BigInt(5)).size() == 5);
  CHECK_THROWS_AS(solve_modular_linear(BigInt(1), BigInt(1), BigInt(1)), ParameterError);
}

TEST_CASE("sieve breaks toy instances and agrees with the k scan") {
  SeededRng rng(43);
  const PrecisionCtx ctx(30);
  for (int i = 0; i < 15; ++i) {
    const BigInt n(static_cast<unsigned long>(2 + rng.uniform(999)));
    const Real x = protocol::pick_public_x(ctx, rng);
    const Real y = chebyshev::t_analytic(n, x, ctx);
    const auto sieve = run_sieve_attack(x, y, ctx, BigInt(1'000'000), {kDefaultSearchWidth, false});
    REQUIRE(sieve.verified.has_value());
    CHECK(*sieve.verified == n);
    CHECK(sieve.work >= 1);
    const auto scanned = k_scan_attack(x, y, ctx, 1000);
    REQUIRE(scanned.verified.has_value());
    CHECK(*scanned.verified == n);
  }
}

TEST_CASE("sieve parameters reproduce the planted degree") {
  const PrecisionCtx ctx(40);
  const Real x = from_decimal("0.3", ctx);
  const BigInt n(777);
  const Real y = chebyshev::t_analytic(n, x, ctx);
  const auto p = sieve_params(y, x, ctx);
  // n = +-d + e*k for some k: check one of the two branches lands on n.
  bool hit = false;
  for (long k = 0; k < 400 && !hit; ++k) {
    for (int sign : {1, -1}) {
      const Real cand = p.d * static_cast<long>(sign) + p.e * k;
      hit = hit || (round_to_integer(cand) == n &&
                    agreement_digits(distance_to_integer(cand) + Real(1L, ctx), Real(1L, ctx)) >= 20);
    }
  }
  CHECK(hit);
  CHECK_THROWS_AS(arccos_ratio(y, from_decimal("1", ctx), ctx), DegenerateValueError);
}

TEST_CASE("spec-scale sieve fails with evidence") {
  SeededRng rng(44);
  const auto named = resolve_suite("64-4", 128, std::nullopt);
  const auto cfg = protocol::SessionConfig::for_suite(named);
  const PrecisionCtx ctx = cfg.ctx();
  const auto secret = strategy::draw_secret(named.suite.functions, cfg.secret, rng);
  const Real x = protocol::pick_public_x(ctx, rng);
  const Real y = strategy::evaluate_secret(secret, x, ctx);
  const auto result = run_sieve_attack(
      x, y, ctx, default_modulus(strategy::max_exponent(named.suite.functions, cfg.secret)));
  CHECK_FALSE(result.success);
  CHECK(result.candidates.size() >= kEvidenceCandidates);
  CHECK(result.best.has_value());
  CHECK(result.best_agreement < 50);
  CHECK(result.generated > result.work);
}

TEST_CASE("brute force recovers planted selections without false positives") {
  SeededRng rng(45);
  const auto named = resolve_suite("4-2", 128, std::nullopt);
  const auto& fs = named.suite.functions;
  const auto cfg = protocol::SessionConfig::for_suite(named);
  const PrecisionCtx ctx(63);
  for (int i = 0; i < 100; ++i) {
    const auto secret = strategy::draw_secret(fs, cfg.secret, rng);
    const Real x = protocol::pick_public_x(ctx, rng);
    const Real y = protocol::wire_value(strategy::evaluate_secret(secret, x, ctx), ctx);
    const auto result = brute_force_combinations(fs, x, y, ctx, i % 2 == 0);
    CHECK(result.work <= 16);
    REQUIRE(result.candidates.size() == 1);
    CHECK(*result.verified == strategy::raw_exponent(secret));
  }
  const auto big = resolve_suite("32-8", 128, std::nullopt);
  const PrecisionCtx wide(100);
  CHECK_THROWS_AS(brute_force_combinations(big.suite.functions, from_decimal("0.3", wide),
                                           from_decimal("0.2", wide), wide),
                  ParameterError);
}

TEST_CASE("power-basis evaluation") {
  const PrecisionCtx ctx(60);
  const Real x = from_decimal("0.61", ctx);
  // T_5 = 16x^5 - 20x^3 + 5x.
  const Real x3 = x * x * x;
  const Real t5 = x3 * x * x * 16L - x3 * 20L + x * 5L;
  CHECK(agreement_digits(t_power_basis(5, x, ctx), t5) >= 58);
  for (std::uint64_t n : {2u, 17u, 40u}) {
    CHECK(agreement_digits(t_power_basis(n, x, ctx), chebyshev::t_recurrence(n, x, ctx)) >= 40);
  }
  CHECK_THROWS_AS(t_power_basis(kMaxPowerBasisDegree + 1, x, ctx), ParameterError);
}

TEST_CASE("low-precision composition order") {
  const Real x = from_decimal("0.3719", PrecisionCtx(16));
  const auto small = double_precision_divergence(3, 5, x);
  CHECK(small.degree == 15);
  CHECK(small.agreement >= 13);
  const auto big = double_precision_divergence(31, 37, x);
  CHECK(big.degree == 1147);
  CHECK(big.agreement < 8);
  CHECK(big.control_agreement >= 150);
  const auto rec = double_precision_divergence(31, 37, x, Evaluator::recurrence);
  CHECK(rec.agreement >= 10);
  const auto mpfr20 = double_precision_divergence(31, 37, x, Evaluator::coefficients, 20);
  CHECK(mpfr20.agreement > big.agreement);
  CHECK(mpfr20.agreement < 16);
  CHECK_THROWS_AS(double_precision_divergence(1001, 1000, x), ParameterError);
}

TEST_CASE("attack CSV layout") {
  AttackResult r;
  r.candidates.push_back({BigInt(12), 30, true});
  r.work = 8;
  std::ostringstream out;
  write_attack_csv(out, "1000", r);
  CHECK(out.str() == "M,candidate,agreement_digits,verified,work\n1000,12,30,1,8\n");
}
