#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qrke/analysis.hpp"
#include "qrke/error.hpp"

using namespace qrke;
using namespace qrke::analysis;

TEST_CASE("chi-square tail against reference values") {
  // Regularized upper incomplete gamma Q(k/2, x/2), computed with mpmath.
  struct Ref {
    double x;
    unsigned k;
    double p;
  };
  for (const Ref r : {Ref{16.919, 9, 0.0499996408483498}, Ref{3.0, 9, 0.964294972685089},
                      Ref{25.0, 9, 0.00297118048591762}, Ref{2.0, 1, 0.157299207050285},
                      Ref{100.0, 39, 2.92872409083867e-7}}) {
    CHECK(chi_square_p_value(r.x, r.k) == doctest::Approx(r.p).epsilon(1e-9));
  }
  CHECK(chi_square_critical(0.01, 9) == doctest::Approx(21.6659943334619).epsilon(1e-9));
  CHECK(chi_square_p_value(chi_square_critical(0.05, 39), 39) == doctest::Approx(0.05));
}

TEST_CASE("uniform goodness of fit") {
  const auto flat = chi_square_uniform({10, 10, 10, 10});
  CHECK(flat.statistic == 0.0);
  CHECK(flat.dof == 3);
  CHECK(flat.p_value == doctest::Approx(1.0));
  const auto skew = chi_square_uniform({20, 0});
  CHECK(skew.statistic == doctest::Approx(20.0));
  CHECK(skew.dof == 1);
  CHECK(skew.p_value == doctest::Approx(chi_square_p_value(20.0, 1)));
}

TEST_CASE("digit uniformity per position") {
  DigitSample sample;
  sample.size = 1000;
  std::array<std::uint64_t, 10> flat{};
  flat.fill(100);
  std::array<std::uint64_t, 10> leading{301, 176, 125, 97, 79, 67, 58, 51, 46, 0};
  sample.counts = {leading, flat};
  const auto tests = digit_uniformity(sample, 1, 2);
  REQUIRE(tests.size() == 2);
  CHECK(tests[0].position == 1);
  CHECK(tests[0].test.dof == 9);
  CHECK(tests[0].test.p_value < 1e-10);
  CHECK(tests[1].test.p_value == doctest::Approx(1.0));
  CHECK_THROWS_AS(digit_uniformity(sample, 1, 3), ParameterError);
  CHECK_THROWS_AS(digit_uniformity(sample, 0, 1), ParameterError);
  sample.size = kMinDigitSample - 1;
  CHECK_THROWS_AS(digit_uniformity(sample, 1, 2), ParameterError);

  std::ostringstream out;
  write_digit_csv(out, tests);
  CHECK(out.str().rfind("position,count_0,count_1,count_2,count_3,count_4,count_5,count_6,"
                        "count_7,count_8,count_9,chi2,p\n",
                        0) == 0);
  CHECK(out.str().find("\n1,301,176,") != std::string::npos);
}

TEST_CASE("shared digit sampling is reproducible and complete") {
  const auto suite = resolve_suite("4-2", 128, std::nullopt);
  SeededRng a(51);
  SeededRng b(51);
  const auto par = sample_shared_digits(suite, 600, 8, a, true);
  const auto ser = sample_shared_digits(suite, 600, 8, b, false);
  CHECK(par.counts == ser.counts);
  CHECK(par.size + par.degenerate_skipped == 600);
  for (const auto& row : par.counts) {
    std::uint64_t total = 0;
    for (auto c : row) {
      total += c;
    }
    CHECK(total == par.size);
  }
  CHECK(par.counts[0][0] == 0);
  CHECK_THROWS_AS(sample_shared_digits(suite, 10, suite.suite.digits + 1, a), ParameterError);
}

TEST_CASE("cost model") {
  const auto fs = strategy::FunctionSet::first_primes_uniform(4, 2);
  const auto c = estimate_cost(fs, 100);
  // primes 2, 3, 5, 7; w = 2.
  CHECK(c.storage_units == doctest::Approx(17.0 * 100));
  CHECK(c.time_units == doctest::Approx(1e4 * 34));
  CHECK(estimate_cost(fs, 100, 1.5).time_units == doctest::Approx(1e3 * 34));
  CHECK_THROWS_AS(estimate_cost(fs, 100, 1.3), ParameterError);
  CHECK_THROWS_AS(estimate_cost(fs, 100, 2.1), ParameterError);
}

TEST_CASE("line fit, rank correlation and median") {
  const auto fit = least_squares({1, 2, 3, 4}, {4, 7, 10, 13});
  CHECK(fit.slope == doctest::Approx(3.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK_THROWS_AS(least_squares({1}, {2}), ParameterError);

  // Ranks of b with a tie: 1, 2, 3.5, 5, 3.5; rho = 8 / sqrt(10 * 9.5).
  CHECK(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}) == doctest::Approx(8.0 / std::sqrt(95.0)));
  CHECK(spearman({1, 2, 3}, {30, 20, 10}) == doctest::Approx(-1.0));

  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
}

TEST_CASE("unimodality") {
  strategy::Histogram h;
  h.counts = {10, 500, 2000, 4000, 2100, 480, 9};
  CHECK(is_unimodal(h));
  h.counts = {3000, 100, 3000};
  CHECK_FALSE(is_unimodal(h));
  // A dip well inside Poisson noise is tolerated.
  h.counts = {100, 1000, 2000, 1990, 2005, 1000, 100};
  CHECK(is_unimodal(h));
  // Tiny tail bins are ignored.
  h.counts = {5, 1, 5000, 1, 5};
  CHECK(is_unimodal(h));
}

TEST_CASE("magnitude report") {
  SeededRng rng(52);
  const auto fs = strategy::FunctionSet::first_primes_uniform(64, 4);
  const auto report = magnitude_report(fs, 2000, rng);
  CHECK(report.unimodal);
  CHECK(report.distribution.trials == 2000);
  CHECK(std::abs(report.mode_log10 - report.distribution.expected_mean) <
        2 * report.distribution.expected_stddev);
  CHECK_THROWS_AS(magnitude_report(fs, kMinMagnitudeTrials - 1, rng), ParameterError);
  std::ostringstream out;
  write_magnitude_csv(out, report);
  CHECK(out.str().rfind("log10_lo,log10_hi,count,expected\n", 0) == 0);
}

TEST_CASE("scaling CSV layout") {
  ScalingReport r;
  r.samples.push_back({"4-2", 500, 0, 0.5});
  r.fits.push_back({"4-2", 1.5, 0.99, 0.1});
  std::ostringstream samples;
  write_scaling_csv(samples, r);
  CHECK(samples.str().rfind("suite,digits,repetition,seconds\n4-2,500,0,", 0) == 0);
  std::ostringstream fits;
  write_fit_csv(fits, r);
  CHECK(fits.str().rfind("suite,exponent,r_squared,median_spread\n4-2,1.5", 0) == 0);
}
