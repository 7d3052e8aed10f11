#pragma once

// Statistical and performance studies: digit uniformity of shared values,
// the magnitude distribution of secret exponents, and the storage/time cost
// model with its measured scaling exponent.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qrke/kernels.hpp"
#include "qrke/rng.hpp"
#include "qrke/strategy.hpp"
#include "qrke/suite.hpp"

namespace qrke::analysis {

// ---------------------------------------------------------------------------
// Chi-square

struct ChiSquare {
  double statistic = 0.0;
  double p_value = 1.0;
  unsigned dof = 0;
};

/// Upper-tail probability of the chi-square distribution.
double chi_square_p_value(double statistic, unsigned dof);

/// Critical value c with P(X > c) = alpha.
double chi_square_critical(double alpha, unsigned dof);

/// Goodness of fit of `counts` against the uniform distribution over its
/// bins; dof = bins - 1.
ChiSquare chi_square_uniform(const std::vector<std::uint64_t>& counts);

// ---------------------------------------------------------------------------
// Digit uniformity

struct DigitSample {
  kernels::DigitCounts counts;  // counts[position - 1][digit]
  std::size_t size = 0;
  std::size_t degenerate_skipped = 0;
};

/// Shared values T_{r*s}(x) for `samples` random sessions on `suite` (r, s
/// drawn by its combination strategy, x by pick_public_x); digit counts at
/// significant positions 1..positions.
DigitSample sample_shared_digits(const NamedSuite& suite, std::size_t samples, int positions,
                                 CryptoRng& rng, bool parallel = true);

struct PositionTest {
  int position = 0;  // 1-based
  std::array<std::uint64_t, 10> counts{};
  ChiSquare test;
};

inline constexpr std::size_t kMinDigitSample = 500;

/// Per-position chi-square against uniform digits, 9 degrees of freedom.
/// Throws ParameterError for samples smaller than kMinDigitSample or a
/// position range outside the sample.
std::vector<PositionTest> digit_uniformity(const DigitSample& sample, int first_position,
                                           int last_position);

/// Header `position,count_0,...,count_9,chi2,p`.
void write_digit_csv(std::ostream& out, const std::vector<PositionTest>& tests);

// ---------------------------------------------------------------------------
// Cost model

struct CostEstimate {
  double storage_units = 0.0;  // sum p_i * digits
  double time_units = 0.0;     // digits^a * sum p_i * w_i
};

/// Throws ParameterError unless 1.4 <= a <= 2.
CostEstimate estimate_cost(const strategy::FunctionSet& fs, int digits, double a = 2.0);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys);

struct ScalingSample {
  std::string suite;
  int digits = 0;
  int repetition = 0;
  double seconds = 0.0;  // wall time of one secret evaluation
};

struct ScalingFit {
  std::string suite;
  double exponent = 0.0;  // slope of log(median time) against log(digits)
  double r_squared = 0.0;
  double median_spread = 0.0;  // largest (max - min) / median over the grid
};

struct ScalingReport {
  std::vector<ScalingSample> samples;
  std::vector<ScalingFit> fits;
};

/// Times evaluate_secret for one fixed secret and x per suite at every grid
/// precision, `repetitions` times each, and fits medians on a log-log scale.
ScalingReport measure_scaling(const std::vector<NamedSuite>& suites,
                              const std::vector<int>& digit_grid, int repetitions,
                              CryptoRng& rng, double min_seconds = 0.02);

/// Header `suite,digits,repetition,seconds`.
void write_scaling_csv(std::ostream& out, const ScalingReport& report);
/// Header `suite,exponent,r_squared,median_spread`.
void write_fit_csv(std::ostream& out, const ScalingReport& report);

// ---------------------------------------------------------------------------
// Magnitude distribution

struct MagnitudeReport {
  strategy::MagnitudeDistribution distribution;
  bool unimodal = false;
  double mode_log10 = 0.0;  // centre of the fullest bin
};

inline constexpr std::size_t kMinMagnitudeTrials = 1000;

/// Throws ParameterError for fewer than kMinMagnitudeTrials trials.
MagnitudeReport magnitude_report(const strategy::FunctionSet& fs, std::size_t trials,
                                 CryptoRng& rng);

/// Rises to a single peak and falls after it, ignoring bins under 1% of the
/// peak and steps smaller than `noise_sigmas` Poisson standard deviations.
bool is_unimodal(const strategy::Histogram& h, double noise_sigmas = 3.0);

/// Header `log10_lo,log10_hi,count,expected`; `expected` is the normal
/// approximation with the analytic mean and standard deviation.
void write_magnitude_csv(std::ostream& out, const MagnitudeReport& report);

// ---------------------------------------------------------------------------

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

double median(std::vector<double> values);

}  // namespace qrke::analysis
