#include "qrke/analysis.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "qrke/error.hpp"
#include "qrke/protocol.hpp"

namespace qrke::analysis {

double chi_square_p_value(double statistic, unsigned dof) {
  if (dof == 0) {
    throw ParameterError("chi-square needs at least one degree of freedom");
  }
  if (statistic <= 0.0) {
    return 1.0;
  }
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

double chi_square_critical(double alpha, unsigned dof) {
  if (dof == 0 || alpha <= 0.0 || alpha >= 1.0) {
    throw ParameterError("chi_square_critical: need dof >= 1 and 0 < alpha < 1");
  }
  const boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

ChiSquare chi_square_uniform(const std::vector<std::uint64_t>& counts) {
  if (counts.size() < 2) {
    throw ParameterError("chi-square needs at least two bins");
  }
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0ull));
  if (total == 0.0) {
    throw ParameterError("chi-square over an empty sample");
  }
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) {
    const double diff = static_cast<double>(c) - expected;
    stat += diff * diff / expected;
  }
  const auto dof = static_cast<unsigned>(counts.size() - 1);
  return ChiSquare{stat, chi_square_p_value(stat, dof), dof};
}

// ---------------------------------------------------------------------------
// Digit uniformity

DigitSample sample_shared_digits(const NamedSuite& suite, std::size_t samples, int positions,
                                 CryptoRng& rng, bool parallel) {
  if (positions < 1 || positions > suite.suite.digits) {
    throw ParameterError("digit positions must lie in [1, suite digits]");
  }
  const PrecisionCtx ctx = suite.suite.ctx();
  auto cfg = protocol::SessionConfig::for_suite(suite);
  std::vector<chebyshev::ChainSpec> chains;
  std::vector<Real> xs;
  chains.reserve(samples);
  xs.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto r = strategy::draw_secret(suite.suite.functions, cfg.secret, rng);
    const auto s = strategy::draw_secret(suite.suite.functions, cfg.secret, rng);
    std::vector<chebyshev::ChainStep> steps;
    for (const auto& sel : {r, s}) {
      const auto chain = strategy::chain_of(sel);
      steps.insert(steps.end(), chain.steps().begin(), chain.steps().end());
    }
    chains.emplace_back(std::move(steps));
    xs.push_back(protocol::pick_public_x(ctx, rng));
  }
  const auto values = parallel ? kernels::omp::evaluate_chains(chains, xs, ctx)
                               : kernels::serial::evaluate_chains(chains, xs, ctx);
  std::vector<Real> usable;
  usable.reserve(values.size());
  for (const auto& v : values) {
    if (v) {
      usable.push_back(*v);
    }
  }
  DigitSample out;
  out.size = usable.size();
  out.degenerate_skipped = samples - usable.size();
  out.counts = parallel ? kernels::omp::digit_counts(usable, positions)
                        : kernels::serial::digit_counts(usable, positions);
  return out;
}

std::vector<PositionTest> digit_uniformity(const DigitSample& sample, int first_position,
                                           int last_position) {
  if (sample.size < kMinDigitSample) {
    throw ParameterError("digit uniformity needs at least 500 samples");
  }
  if (first_position < 1 || last_position < first_position ||
      last_position > static_cast<int>(sample.counts.size())) {
    throw ParameterError("digit position range outside the sample");
  }
  std::vector<PositionTest> out;
  for (int p = first_position; p <= last_position; ++p) {
    const auto& row = sample.counts[static_cast<std::size_t>(p - 1)];
    PositionTest t;
    t.position = p;
    t.counts = row;
    t.test = chi_square_uniform(std::vector<std::uint64_t>(row.begin(), row.end()));
    out.push_back(t);
  }
  return out;
}

void write_digit_csv(std::ostream& out, const std::vector<PositionTest>& tests) {
  out << "position";
  for (int d = 0; d < 10; ++d) {
    out << ",count_" << d;
  }
  out << ",chi2,p\n";
  for (const auto& t : tests) {
    out << t.position;
    for (auto c : t.counts) {
      out << ',' << c;
    }
    out << ',' << t.test.statistic << ',' << t.test.p_value << '\n';
  }
}

// ---------------------------------------------------------------------------
// Cost model and scaling

CostEstimate estimate_cost(const strategy::FunctionSet& fs, int digits, double a) {
  if (!(a >= 1.4 && a <= 2.0)) {
    throw ParameterError("cost exponent a must lie in [1.4, 2]");
  }
  if (digits < 1) {
    throw ParameterError("digits must be positive");
  }
  double sum_p = 0.0;
  double sum_pw = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    sum_p += fs.primes()[i];
    sum_pw += static_cast<double>(fs.primes()[i]) * fs.max_reps()[i];
  }
  return CostEstimate{sum_p * digits, std::pow(static_cast<double>(digits), a) * sum_pw};
}

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ParameterError("least squares needs two or more paired points");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    throw ParameterError("least squares needs distinct x values");
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw ParameterError("median of an empty set");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ScalingReport measure_scaling(const std::vector<NamedSuite>& suites,
                              const std::vector<int>& digit_grid, int repetitions,
                              CryptoRng& rng, double min_seconds) {
  if (digit_grid.size() < 2 || repetitions < 1) {
    throw ParameterError("scaling needs at least two grid points and one repetition");
  }
  using clock = std::chrono::steady_clock;
  ScalingReport report;
  const int top = *std::max_element(digit_grid.begin(), digit_grid.end());
  for (const auto& named : suites) {
    auto cfg = protocol::SessionConfig::for_suite(named);
    const auto secret = strategy::draw_secret(named.suite.functions, cfg.secret, rng);
    // One x for the whole grid, re-drawn if any precision hits a fixed point.
    Real x = protocol::pick_public_x(PrecisionCtx(top), rng);
    for (int attempt = 0;; ++attempt) {
      try {
        for (int d : digit_grid) {
          strategy::evaluate_secret(secret, x, PrecisionCtx(d));
        }
        break;
      } catch (const DegenerateValueError&) {
        if (attempt >= 10) {
          throw;
        }
        x = protocol::pick_public_x(PrecisionCtx(top), rng);
      }
    }

    std::vector<double> log_digits;
    std::vector<double> log_medians;
    double spread = 0.0;
    for (int d : digit_grid) {
      const PrecisionCtx ctx(d);
      const Real xd = x.rounded(ctx);
      std::vector<double> times;
      for (int rep = 0; rep < repetitions; ++rep) {
        std::size_t runs = 0;
        const auto start = clock::now();
        double elapsed = 0.0;
        do {
          strategy::evaluate_secret(secret, xd, ctx);
          ++runs;
          elapsed = std::chrono::duration<double>(clock::now() - start).count();
        } while (elapsed < min_seconds);
        const double per_run = elapsed / static_cast<double>(runs);
        times.push_back(per_run);
        report.samples.push_back({named.name, d, rep, per_run});
      }
      const double med = median(times);
      const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
      spread = std::max(spread, (*hi - *lo) / med);
      log_digits.push_back(std::log(static_cast<double>(d)));
      log_medians.push_back(std::log(med));
    }
    const LineFit fit = least_squares(log_digits, log_medians);
    report.fits.push_back({named.name, fit.slope, fit.r_squared, spread});
  }
  return report;
}

void write_scaling_csv(std::ostream& out, const ScalingReport& report) {
  out << "suite,digits,repetition,seconds\n";
  for (const auto& s : report.samples) {
    out << s.suite << ',' << s.digits << ',' << s.repetition << ',' << s.seconds << '\n';
  }
}

void write_fit_csv(std::ostream& out, const ScalingReport& report) {
  out << "suite,exponent,r_squared,median_spread\n";
  for (const auto& f : report.fits) {
    out << f.suite << ',' << f.exponent << ',' << f.r_squared << ',' << f.median_spread << '\n';
  }
}

// ---------------------------------------------------------------------------
// Magnitudes

bool is_unimodal(const strategy::Histogram& h, double noise_sigmas) {
  if (h.counts.empty()) {
    return false;
  }
  const auto peak_it = std::max_element(h.counts.begin(), h.counts.end());
  const double floor = 0.01 * static_cast<double>(*peak_it);
  std::vector<double> kept;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (static_cast<double>(h.counts[i]) >= floor) {
      if (h.counts.begin() + static_cast<std::ptrdiff_t>(i) == peak_it) {
        peak = kept.size();
      }
      kept.push_back(static_cast<double>(h.counts[i]));
    }
  }
  const auto noise = [&](double a, double b) { return noise_sigmas * std::sqrt(std::max(a, b)); };
  // Running extremes, so a slow drift cannot hide a second peak.
  double high = kept.front();
  for (std::size_t i = 1; i <= peak; ++i) {
    if (kept[i] < high - noise(kept[i], high)) {
      return false;
    }
    high = std::max(high, kept[i]);
  }
  double low = kept[peak];
  for (std::size_t i = peak + 1; i < kept.size(); ++i) {
    if (kept[i] > low + noise(kept[i], low)) {
      return false;
    }
    low = std::min(low, kept[i]);
  }
  return true;
}

MagnitudeReport magnitude_report(const strategy::FunctionSet& fs, std::size_t trials,
                                 CryptoRng& rng) {
  if (trials < kMinMagnitudeTrials) {
    throw ParameterError("magnitude report needs at least 1000 trials");
  }
  MagnitudeReport out;
  out.distribution = strategy::simulate_magnitude_distribution(fs, trials, rng);
  const auto& h = out.distribution.histogram;
  out.unimodal = is_unimodal(h);
  const auto peak = std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin();
  out.mode_log10 = h.origin + (static_cast<double>(peak) + 0.5) * h.bin_width;
  return out;
}

void write_magnitude_csv(std::ostream& out, const MagnitudeReport& report) {
  const auto& d = report.distribution;
  const auto& h = d.histogram;
  out << "log10_lo,log10_hi,count,expected\n";
  const double n = static_cast<double>(d.trials);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double lo = h.origin + static_cast<double>(i) * h.bin_width;
    const double hi = lo + h.bin_width;
    double expected = 0.0;
    if (d.expected_stddev > 0.0) {
      const auto cdf = [&](double v) {
        return 0.5 * std::erfc(-(v - d.expected_mean) / (d.expected_stddev * std::sqrt(2.0)));
      };
      expected = n * (cdf(hi) - cdf(lo));
    }
    out << lo << ',' << hi << ',' << h.counts[i] << ',' << expected << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> out(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      out[order[k]] = avg;
    }
    i = j + 1;
  }
  return out;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ParameterError("spearman needs two or more paired values");
  }
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return (saa == 0.0 || sbb == 0.0) ? 0.0 : sab / std::sqrt(saa * sbb);
}

}  // namespace qrke::analysis
