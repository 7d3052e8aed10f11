#pragma once

// Cryptanalytic procedures against the Chebyshev exchange, run at desk
// scale. Given public x and an intercepted y = T_n(x), the degree satisfies
//
//   n = +-d + e*k,   d = arccos(y) / arccos(x),   e = 2*pi / arccos(x)
//
// for some integer k >= 0. The diophantine sieve multiplies by a modulus M
// and solves k*[e*M] == [-+d*M] + j (mod M) for a small integer residual j;
// every solution k gives a candidate degree that is then checked with
// t_analytic. These runs demonstrate, they do not prove, how the attacks
// behave once enough digits are carried.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qrke/bigint.hpp"
#include "qrke/realfield.hpp"
#include "qrke/strategy.hpp"

namespace qrke::attack {

/// arccos(y) / arccos(x). Throws DegenerateValueError when arccos(x) is
/// within 10^-(digits/2) of 0, DomainError unless x, y lie in [-1, 1].
Real arccos_ratio(const Real& y, const Real& x, const PrecisionCtx& ctx);

struct SieveParams {
  Real d;
  Real e;
};

SieveParams sieve_params(const Real& y, const Real& x, const PrecisionCtx& ctx);

/// All k in [0, M) with k*a == b (mod M), ascending. Empty when gcd(a, M)
/// does not divide b. Throws ParameterError for M < 2.
std::vector<BigInt> solve_modular_linear(const BigInt& a, const BigInt& b, const BigInt& m);

/// Extended gcd: returns g = gcd(a, b) >= 0 and sets s, t with a*s + b*t = g.
BigInt extended_gcd(const BigInt& a, const BigInt& b, BigInt& s, BigInt& t);

struct Candidate {
  BigInt value;
  int agreement = 0;  // digits of t_analytic(value, x) matching y
  bool verified = false;
};

struct AttackResult {
  std::vector<Candidate> candidates;  // every candidate checked with t_analytic
  std::optional<BigInt> verified;     // smallest verified candidate
  bool success = false;
  std::uint64_t work = 0;             // evaluations of T at x
  std::uint64_t generated = 0;        // candidates generated before filtering
  double median_log10 = 0.0;          // median log10 of generated candidates
  int best_agreement = 0;
  std::optional<BigInt> best;         // candidate with the highest agreement
};

inline constexpr std::int64_t kDefaultSearchWidth = 512;

/// Candidates closest to an integer that are checked even when none passes
/// the integrality filter, so failures come with an agreement profile.
inline constexpr std::size_t kEvidenceCandidates = 8;

struct SieveOptions {
  std::int64_t search_width = kDefaultSearchWidth;  // |j| bound
  bool parallel = true;
};

/// Default attacker modulus: 10^(decimal length of the exponent bound).
BigInt default_modulus(const BigInt& exponent_bound);

AttackResult run_sieve_attack(const Real& x, const Real& y, const PrecisionCtx& ctx,
                              const BigInt& modulus, SieveOptions opts = {});

/// Cross-check: walks k = 0..k_max directly instead of solving congruences.
AttackResult k_scan_attack(const Real& x, const Real& y, const PrecisionCtx& ctx,
                           std::uint64_t k_max);

/// Refuses (ParameterError) sets with more combinations than this.
inline constexpr std::uint64_t kBruteForceGuard = std::uint64_t{1} << 24;

/// Every repetition vector, evaluated as a chain at x and compared with y.
AttackResult brute_force_combinations(const strategy::FunctionSet& fs, const Real& x,
                                      const Real& y, const PrecisionCtx& ctx,
                                      bool parallel = true);

enum class Evaluator {
  recurrence,    // three-term recurrence
  coefficients,  // expanded power basis, Horner's rule
};

/// T_n(x) from its exact integer power-basis coefficients, Horner at ctx.
/// Throws ParameterError for n > kMaxPowerBasisDegree.
Real t_power_basis(std::uint64_t n, const Real& x, const PrecisionCtx& ctx);
inline constexpr std::uint64_t kMaxPowerBasisDegree = 5000;

struct DivergenceReport {
  std::uint64_t r = 0;
  std::uint64_t s = 0;
  std::uint64_t degree = 0;
  int digits = 16;
  int agreement = 0;              // relative agreement of the two orders
  int first_disagreeing_digit = 0;  // 1-based position in the significand strings
  bool sign_mismatch = false;
  int control_digits = 200;
  int control_agreement = 0;      // same inputs at control_digits, recurrence
};

/// At this many digits the low-precision leg runs in hardware binary64
/// (53-bit significand, overflow to infinity) instead of MPFR.
inline constexpr int kBinary64Digits = 16;

/// Compares T_r(T_s(x)) with T_s(T_r(x)) at `digits` and at `control_digits`.
/// A non-finite binary64 result counts as disagreement from the first digit.
/// Throws ParameterError when r*s > 10^6.
DivergenceReport double_precision_divergence(std::uint64_t r, std::uint64_t s, const Real& x,
                                             Evaluator evaluator = Evaluator::coefficients,
                                             int digits = 16, int control_digits = 200);

/// CSV with header `M,candidate,agreement_digits,verified,work`, one row
/// per checked candidate. `modulus` fills the M column ("-" for brute force).
void write_attack_csv(std::ostream& out, const std::string& modulus, const AttackResult& result,
                      bool header = true);

}  // namespace qrke::attack
