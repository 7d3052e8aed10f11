#include "qrke/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "qrke/error.hpp"
#include "qrke/kernels.hpp"

namespace qrke::strategy {

bool is_prime(std::uint64_t n) {
  if (n < 2) {
    return false;
  }
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      return false;
    }
  }
  return true;
}

std::vector<std::uint32_t> first_primes(std::size_t count) {
  std::vector<std::uint32_t> out;
  out.reserve(count);
  // Sieve with a bound from p_n < n (ln n + ln ln n) for n >= 6.
  std::size_t limit = 16;
  if (count >= 6) {
    const double n = static_cast<double>(count);
    limit = static_cast<std::size_t>(n * (std::log(n) + std::log(std::log(n)))) + 1;
  }
  std::vector<bool> composite(limit + 1, false);
  for (std::size_t i = 2; i <= limit && out.size() < count; ++i) {
    if (composite[i]) {
      continue;
    }
    out.push_back(static_cast<std::uint32_t>(i));
    for (std::size_t j = i * i; j <= limit; j += i) {
      composite[j] = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FunctionSet

FunctionSet::FunctionSet(std::vector<std::uint32_t> primes, std::vector<std::uint32_t> max_reps,
                         std::uint32_t pool_size)
    : primes_(std::move(primes)), max_reps_(std::move(max_reps)), pool_size_(pool_size) {
  if (primes_.empty()) {
    throw ParameterError("function set needs at least one prime");
  }
  if (primes_.size() != max_reps_.size()) {
    throw ParameterError("function set: primes and repetition bounds differ in length");
  }
  if (pool_size_ < primes_.size()) {
    throw ParameterError("function set: pool size M is smaller than N");
  }
  std::set<std::uint32_t> seen;
  for (auto p : primes_) {
    if (!is_prime(p)) {
      throw ParameterError("function set: " + std::to_string(p) + " is not prime");
    }
    if (!seen.insert(p).second) {
      throw ParameterError("function set: duplicate prime " + std::to_string(p));
    }
  }
  for (auto w : max_reps_) {
    if (w == 0) {
      throw ParameterError("function set: repetition bounds must be >= 1");
    }
  }
}

FunctionSet FunctionSet::first_primes_uniform(std::size_t n, std::uint32_t w) {
  return FunctionSet(first_primes(n), std::vector<std::uint32_t>(n, w),
                     static_cast<std::uint32_t>(n));
}

BigInt FunctionSet::d_max() const {
  BigInt d = 1;
  for (std::size_t i = 0; i < primes_.size(); ++i) {
    d *= big_pow(primes_[i], max_reps_[i]);
  }
  return d;
}

FunctionSet gen_function_set(std::size_t n, std::size_t m, CryptoRng& rng, std::uint32_t w) {
  if (n == 0) {
    throw ParameterError("gen_function_set: N must be at least 1");
  }
  if (m < n) {
    throw ParameterError("gen_function_set: M (" + std::to_string(m) + ") < N (" +
                         std::to_string(n) + ")");
  }
  if (w == 0) {
    throw ParameterError("gen_function_set: w must be at least 1");
  }
  std::vector<std::uint32_t> pool = first_primes(m);
  // Partial Fisher-Yates: the first n slots become a uniform n-subset.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform(m - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return FunctionSet(std::move(pool), std::vector<std::uint32_t>(n, w),
                     static_cast<std::uint32_t>(m));
}

BigInt combination_count(const FunctionSet& fs) {
  BigInt s = 1;
  for (auto w : fs.max_reps()) {
    s *= w;
  }
  return s;
}

BigInt casket_count(std::uint64_t n, std::uint64_t r) {
  if (n == 0 || r == 0) {
    throw ParameterError("casket_count: n and r must be positive");
  }
  BigInt out;
  mpz_bin_uiui(out.get_mpz_t(), n + r - 1, r);
  return out;
}

// ---------------------------------------------------------------------------
// Secrets

BigInt default_exponent_floor() { return pow10(39); }

SecretExponent::SecretExponent(BigInt value) : value_(std::move(value)) {
  if (value_ < 2) {
    throw DomainError("secret exponent must be >= 2");
  }
}

BigInt max_exponent(const FunctionSet& fs, const SecretConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::combination: {
      BigInt e = 1;
      for (std::size_t i = 0; i < fs.size(); ++i) {
        e *= big_pow(fs.primes()[i], fs.max_reps()[i] - 1);
      }
      return e;
    }
    case Strategy::casket: {
      const auto largest = *std::max_element(fs.primes().begin(), fs.primes().end());
      return big_pow(largest, cfg.casket_size);
    }
    case Strategy::analytic:
      return pow10(cfg.analytic_max_digits) - 1;
  }
  return 0;
}

Combination draw_repetitions(const FunctionSet& fs, CryptoRng& rng) {
  Combination c;
  c.primes = fs.primes();
  c.reps.reserve(fs.size());
  for (auto w : fs.max_reps()) {
    c.reps.push_back(static_cast<std::uint32_t>(rng.uniform(w)));
  }
  return c;
}

namespace {

void validate_config(const SecretConfig& cfg) {
  if (cfg.floor < 2) {
    throw ParameterError("secret floor must be at least 2");
  }
  if (cfg.strategy == Strategy::casket && cfg.casket_size == 0) {
    throw ParameterError("casket strategy needs a positive casket size r");
  }
  if (cfg.strategy == Strategy::analytic &&
      (cfg.analytic_min_digits == 0 || cfg.analytic_min_digits > cfg.analytic_max_digits)) {
    throw ParameterError("analytic strategy needs 1 <= min digits <= max digits");
  }
}

SecretSelection draw_once(const FunctionSet& fs, const SecretConfig& cfg, CryptoRng& rng) {
  switch (cfg.strategy) {
    case Strategy::combination:
      return draw_repetitions(fs, rng);
    case Strategy::casket: {
      Casket c;
      c.picks.reserve(cfg.casket_size);
      for (std::uint32_t i = 0; i < cfg.casket_size; ++i) {
        c.picks.push_back(fs.primes()[rng.uniform(fs.size())]);
      }
      std::sort(c.picks.begin(), c.picks.end());
      return c;
    }
    case Strategy::analytic: {
      const BigInt low = pow10(cfg.analytic_min_digits - 1);
      const BigInt high = pow10(cfg.analytic_max_digits);
      return Analytic{low + rng.uniform(BigInt(high - low))};
    }
  }
  throw ParameterError("unknown strategy");
}

constexpr int kMaxFloorResamples = 100'000;

}  // namespace

SecretSelection draw_secret(const FunctionSet& fs, const SecretConfig& cfg, CryptoRng& rng) {
  validate_config(cfg);
  if (max_exponent(fs, cfg) < cfg.floor) {
    throw ParameterError("secret floor is unreachable with this function set");
  }
  for (int attempt = 0; attempt < kMaxFloorResamples; ++attempt) {
    SecretSelection sel = draw_once(fs, cfg, rng);
    if (raw_exponent(sel) >= cfg.floor) {
      return sel;
    }
  }
  throw ParameterError("secret floor not reached after " + std::to_string(kMaxFloorResamples) +
                       " draws");
}

BigInt raw_exponent(const SecretSelection& sel) {
  return std::visit(
      [](const auto& s) -> BigInt {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Combination>) {
          BigInt e = 1;
          for (std::size_t i = 0; i < s.primes.size(); ++i) {
            e *= big_pow(s.primes[i], s.reps[i]);
          }
          return e;
        } else if constexpr (std::is_same_v<T, Casket>) {
          BigInt e = 1;
          for (auto p : s.picks) {
            e *= p;
          }
          return e;
        } else {
          return s.n;
        }
      },
      sel);
}

SecretExponent exponent_of(const SecretSelection& sel) { return SecretExponent(raw_exponent(sel)); }

chebyshev::ChainSpec chain_of(const SecretSelection& sel) {
  std::vector<chebyshev::ChainStep> steps;
  if (const auto* c = std::get_if<Combination>(&sel)) {
    for (std::size_t i = 0; i < c->primes.size(); ++i) {
      steps.push_back({c->primes[i], c->reps[i]});
    }
  } else if (const auto* k = std::get_if<Casket>(&sel)) {
    std::map<std::uint32_t, std::uint64_t> counts;
    for (auto p : k->picks) {
      ++counts[p];
    }
    for (const auto& [p, n] : counts) {
      steps.push_back({p, n});
    }
  } else {
    throw DomainError("analytic selections have no chain form");
  }
  return chebyshev::ChainSpec(std::move(steps)).canonical();
}

// ---------------------------------------------------------------------------
// Sizing

int shared_digit_requirement(unsigned security_bits) {
  switch (security_bits) {
    case 128:
      return 50;
    case 256:
      return 90;
    default:
      throw ParameterError("security level must be 128 or 256 bits, got " +
                           std::to_string(security_bits));
  }
}

namespace {

// ceil(log10(n)) for n >= 1, exact.
int ceil_log10(const BigInt& n) {
  const std::size_t len = decimal_length(n);
  return n == pow10(static_cast<unsigned long>(len - 1)) ? static_cast<int>(len - 1)
                                                          : static_cast<int>(len);
}

}  // namespace

int required_precision(const FunctionSet& fs, unsigned security_bits) {
  return ceil_log10(fs.d_max()) + shared_digit_requirement(security_bits) +
         kSkippedLeadingDigits;
}

void check_fits(const FunctionSet& fs, const SecretConfig& cfg, int digits,
                unsigned security_bits) {
  validate_config(cfg);
  const BigInt largest = max_exponent(fs, cfg);
  if (largest < cfg.floor) {
    throw ParameterError("secret floor is unreachable with this function set");
  }
  const int needed =
      ceil_log10(largest) + shared_digit_requirement(security_bits) + kSkippedLeadingDigits;
  if (needed > digits) {
    throw ParameterError("strategy can produce exponents needing " + std::to_string(needed) +
                         " digits, suite carries " + std::to_string(digits));
  }
}

Real evaluate_secret(const SecretSelection& sel, const Real& x, const PrecisionCtx& ctx) {
  if (const auto* a = std::get_if<Analytic>(&sel)) {
    return chebyshev::t_analytic(a->n, x, ctx);
  }
  return chebyshev::compose_chain(chain_of(sel), x, ctx);
}

// ---------------------------------------------------------------------------
// Magnitude distribution

double expected_log10_mean(const FunctionSet& fs) {
  double mean = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double w = fs.max_reps()[i];
    mean += 0.5 * (w - 1.0) * std::log10(static_cast<double>(fs.primes()[i]));
  }
  return mean;
}

double expected_log10_stddev(const FunctionSet& fs) {
  double var = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double w = fs.max_reps()[i];
    const double lg = std::log10(static_cast<double>(fs.primes()[i]));
    var += (w * w - 1.0) / 12.0 * lg * lg;
  }
  return std::sqrt(var);
}

MagnitudeDistribution simulate_magnitude_distribution(const FunctionSet& fs, std::size_t trials,
                                                      CryptoRng& rng, double bin_width) {
  if (trials == 0) {
    throw ParameterError("simulate_magnitude_distribution: trials must be >= 1");
  }
  std::vector<Combination> draws;
  draws.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    draws.push_back(draw_repetitions(fs, rng));
  }
  const std::vector<double> logs = kernels::omp::log10_exponents(draws);

  MagnitudeDistribution out;
  out.trials = trials;
  out.expected_mean = expected_log10_mean(fs);
  out.expected_stddev = expected_log10_stddev(fs);
  out.mean = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(trials);
  double ss = 0.0;
  for (double v : logs) {
    ss += (v - out.mean) * (v - out.mean);
  }
  out.stddev = trials > 1 ? std::sqrt(ss / static_cast<double>(trials - 1)) : 0.0;

  double width = bin_width;
  if (width <= 0.0) {
    width = out.expected_stddev > 0.0 ? out.expected_stddev / 4.0 : 1.0;
  }
  const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
  out.histogram.bin_width = width;
  out.histogram.origin = std::floor(*lo / width) * width;
  const auto bins = static_cast<std::size_t>(std::floor((*hi - out.histogram.origin) / width)) + 1;
  out.histogram.counts.assign(bins, 0);
  for (double v : logs) {
    auto bin = static_cast<std::size_t>(std::floor((v - out.histogram.origin) / width));
    bin = std::min(bin, bins - 1);
    ++out.histogram.counts[bin];
  }
  return out;
}

}  // namespace qrke::strategy
