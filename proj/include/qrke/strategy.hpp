#pragma once

// Secret-generation strategies and parameter sizing.
//
// A FunctionSet lists prime indices p_i with repetition bounds w_i. A party's
// secret is one of
//   Combination  exponents v_i drawn uniformly from [0, w_i)
//   Casket       a multiset of r indices drawn from the set
//   Analytic     one big integer n of a configured decimal length
// and the composed degree (the "secret exponent") is prod p_i^v_i, the product
// of the multiset, or n respectively.
//
// Selections are never transmitted, logged or printed; there is deliberately
// no stream operator for them.

#include <cstdint>
#include <variant>
#include <vector>

#include "qrke/bigint.hpp"
#include "qrke/chebyshev.hpp"
#include "qrke/realfield.hpp"
#include "qrke/rng.hpp"

namespace qrke::strategy {

/// The first `count` primes, starting at 2.
std::vector<std::uint32_t> first_primes(std::size_t count);

bool is_prime(std::uint64_t n);

class FunctionSet {
 public:
  /// Throws ParameterError unless the primes are distinct primes, sizes match,
  /// every w_i >= 1 and pool_size >= number of primes.
  FunctionSet(std::vector<std::uint32_t> primes, std::vector<std::uint32_t> max_reps,
              std::uint32_t pool_size);

  /// First n primes, all with repetition bound w, pool = n.
  static FunctionSet first_primes_uniform(std::size_t n, std::uint32_t w);

  const std::vector<std::uint32_t>& primes() const noexcept { return primes_; }
  const std::vector<std::uint32_t>& max_reps() const noexcept { return max_reps_; }
  std::uint32_t pool_size() const noexcept { return pool_size_; }
  std::size_t size() const noexcept { return primes_.size(); }

  /// prod p_i^w_i, the sizing bound for the composed degree.
  BigInt d_max() const;

  friend bool operator==(const FunctionSet&, const FunctionSet&) = default;

 private:
  std::vector<std::uint32_t> primes_;
  std::vector<std::uint32_t> max_reps_;
  std::uint32_t pool_size_;
};

/// N distinct primes drawn uniformly from the first M primes (sorted), all
/// with repetition bound w. Throws ParameterError when M < N or N == 0.
FunctionSet gen_function_set(std::size_t n, std::size_t m, CryptoRng& rng, std::uint32_t w = 2);

/// prod w_i.
BigInt combination_count(const FunctionSet& fs);

/// binomial(n + r - 1, r): multisets of size r over n items.
BigInt casket_count(std::uint64_t n, std::uint64_t r);

enum class Strategy { combination, casket, analytic };

/// Default security floor on secret exponents.
BigInt default_exponent_floor();

struct SecretConfig {
  Strategy strategy = Strategy::combination;
  std::uint32_t casket_size = 0;           // r, casket only
  std::uint32_t analytic_min_digits = 200;  // analytic only
  std::uint32_t analytic_max_digits = 600;
  BigInt floor = default_exponent_floor();
};

struct Combination {
  std::vector<std::uint32_t> primes;
  std::vector<std::uint32_t> reps;
};

struct Casket {
  std::vector<std::uint32_t> picks;  // sorted ascending
};

struct Analytic {
  BigInt n;
};

using SecretSelection = std::variant<Combination, Casket, Analytic>;

/// Composed degree of a selection; always >= 2.
class SecretExponent {
 public:
  /// Throws DomainError when value < 2.
  explicit SecretExponent(BigInt value);
  const BigInt& value() const noexcept { return value_; }

 private:
  BigInt value_;
};

/// Largest exponent the configuration can produce.
BigInt max_exponent(const FunctionSet& fs, const SecretConfig& cfg);

/// Uniform repetition vector with v_i in [0, w_i), no floor applied.
Combination draw_repetitions(const FunctionSet& fs, CryptoRng& rng);

/// Draws per cfg.strategy and resamples until the exponent reaches cfg.floor.
/// Throws ParameterError when the floor is unreachable.
SecretSelection draw_secret(const FunctionSet& fs, const SecretConfig& cfg, CryptoRng& rng);

/// Exact product. Throws DomainError for selections below 2 (only possible
/// for hand-built selections).
SecretExponent exponent_of(const SecretSelection& sel);

/// Raw product without the >= 2 invariant (brute-force enumeration needs the
/// all-zero vector).
BigInt raw_exponent(const SecretSelection& sel);

/// Chain form of a Combination or Casket selection. Throws DomainError for
/// Analytic.
chebyshev::ChainSpec chain_of(const SecretSelection& sel);

/// 50 digits for 128-bit security, 90 for 256-bit.
int shared_digit_requirement(unsigned security_bits);

/// Digits skipped at the head of the shared value before key extraction.
inline constexpr int kSkippedLeadingDigits = 10;

/// ceil(log10(d_max)) + shared_digit_requirement + 10. Throws ParameterError
/// for security levels other than 128 and 256.
int required_precision(const FunctionSet& fs, unsigned security_bits);

/// Throws ParameterError when the strategy can produce exponents the context
/// cannot carry (log10(max exponent) + shared + 10 > ctx.digits), or when the
/// floor is unreachable.
void check_fits(const FunctionSet& fs, const SecretConfig& cfg, int digits,
                unsigned security_bits);

/// Combination/Casket: compose_chain in canonical order. Analytic: t_analytic.
Real evaluate_secret(const SecretSelection& sel, const Real& x, const PrecisionCtx& ctx);

struct Histogram {
  double origin = 0.0;     // left edge of bin 0
  double bin_width = 1.0;
  std::vector<std::uint64_t> counts;
};

struct MagnitudeDistribution {
  Histogram histogram;
  double mean = 0.0;
  double stddev = 0.0;
  double expected_mean = 0.0;    // sum E[v_i] log10 p_i
  double expected_stddev = 0.0;  // sqrt(sum Var[v_i] (log10 p_i)^2)
  std::size_t trials = 0;
};

/// E[log10 d] and its standard deviation for uniform v_i on [0, w_i).
double expected_log10_mean(const FunctionSet& fs);
double expected_log10_stddev(const FunctionSet& fs);

/// Distribution of log10(exponent) over `trials` raw combination draws.
/// bin_width <= 0 picks a quarter of the analytic standard deviation.
MagnitudeDistribution simulate_magnitude_distribution(const FunctionSet& fs, std::size_t trials,
                                                      CryptoRng& rng, double bin_width = 0.0);

}  // namespace qrke::strategy
