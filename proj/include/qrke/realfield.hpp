#pragma once

// Arbitrary-precision reals under an explicit decimal-digit precision
// context. Every trigonometric entry point (and the reduction modulo 2*pi)
// lives here so that guard-digit policy is decided in exactly one place.
//
// Values are backed by MPFR. A context of D decimal digits maps to
// ceil(D * log2(10)) + 2 mantissa bits, which is enough for any D-digit
// decimal string to survive decimal -> binary -> decimal unchanged.

#include <mpfr.h>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "qrke/bigint.hpp"

namespace qrke {

inline constexpr int kMinDigits = 16;

class PrecisionCtx {
 public:
  /// Throws ParameterError for digits < kMinDigits.
  explicit PrecisionCtx(int digits);

  int digits() const noexcept { return digits_; }
  mpfr_prec_t bits() const noexcept { return bits_for(digits_); }

  PrecisionCtx widened(int extra_digits) const {
    return PrecisionCtx(digits_ + extra_digits);
  }

  static mpfr_prec_t bits_for(int digits) noexcept;

  friend bool operator==(const PrecisionCtx&, const PrecisionCtx&) = default;

 private:
  int digits_;
};

/// Immutable-by-convention multiprecision real. Binary operators produce a
/// result at the wider of the two operand precisions, rounded to nearest.
class Real {
 public:
  explicit Real(const PrecisionCtx& ctx);
  Real(long value, const PrecisionCtx& ctx);
  Real(const BigInt& value, const PrecisionCtx& ctx);

  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  int digits() const noexcept { return digits_; }
  PrecisionCtx ctx() const { return PrecisionCtx(digits_); }

  /// Same value rounded (or exactly widened) to another context.
  Real rounded(const PrecisionCtx& ctx) const;

  Real operator-() const;
  Real abs() const;
  int sign() const noexcept { return mpfr_sgn(value_); }
  bool is_zero() const noexcept { return mpfr_zero_p(value_) != 0; }
  double to_double() const noexcept { return mpfr_get_d(value_, MPFR_RNDN); }

  friend Real operator+(const Real& a, const Real& b);
  friend Real operator-(const Real& a, const Real& b);
  friend Real operator*(const Real& a, const Real& b);
  friend Real operator/(const Real& a, const Real& b);
  friend Real operator*(const Real& a, const BigInt& b);
  friend Real operator*(const Real& a, long b);

  friend bool operator==(const Real& a, const Real& b) {
    return mpfr_equal_p(a.value_, b.value_) != 0;
  }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b);
  friend std::partial_ordering operator<=>(const Real& a, long b);
  friend bool operator==(const Real& a, long b) { return mpfr_cmp_si(a.value_, b) == 0; }

  /// Direct MPFR access for kernels that need in-place fused operations.
  mpfr_srcptr raw() const noexcept { return value_; }
  mpfr_ptr raw() noexcept { return value_; }

 private:
  Real(mpfr_prec_t bits, int digits);

  mpfr_t value_;
  int digits_;
};

/// Parses `[+-]D+[.D+][(e|E)[+-]D+]` and rounds to ctx.digits significant
/// decimal digits (round half to even). Throws ParseError.
Real from_decimal(std::string_view text, const PrecisionCtx& ctx);

/// Canonical form `[-]D[.D+]e[-]D+` with exactly `max_digits` significand
/// digits (trailing zeros kept), zero written "0e0".
/// Requires 1 <= max_digits <= v.digits().
std::string to_decimal(const Real& v, int max_digits);
inline std::string to_decimal(const Real& v) { return to_decimal(v, v.digits()); }

/// True iff `text` is in the canonical grammar accepted on the wire.
bool is_canonical_decimal(std::string_view text);

/// The first `count` significant decimal digits of |v|, truncated (not
/// rounded). Zero yields all '0'.
std::string significant_digits(const Real& v, int count);

/// Result in [0, pi]. Throws DomainError when |v| > 1.
Real arccos(const Real& v, const PrecisionCtx& ctx);

/// Cosine of an arbitrary argument; large arguments are reduced with
/// mod_two_pi using as many guard digits as the argument has integer digits.
Real cos(const Real& v, const PrecisionCtx& ctx);

/// v reduced into [0, 2*pi), computed at ctx.digits + guard_digits so the
/// result keeps ctx.digits correct digits. Throws PrecisionError when
/// guard_digits is smaller than the decimal length of floor(|v| / 2*pi).
Real mod_two_pi(const Real& v, const PrecisionCtx& ctx, int guard_digits);

/// pi and 2*pi at the given context, computed once per context and cached.
const Real& pi(const PrecisionCtx& ctx);
const Real& two_pi(const PrecisionCtx& ctx);

/// Nearest integer, ties away from zero.
BigInt round_to_integer(const Real& v);

/// |v - round(v)|.
Real distance_to_integer(const Real& v);

/// Number of leading significant decimal digits on which a and b agree,
/// measured as floor(-log10(|a - b| / max(|a|, |b|))) and clamped to
/// [0, min(a.digits(), b.digits())]. Opposite signs agree on 0 digits.
int agreement_digits(const Real& a, const Real& b);

/// Length of the common prefix of the canonical significand strings of a
/// and b at `max_digits` digits; 0 when sign or decimal exponent differ.
int common_prefix_digits(const Real& a, const Real& b, int max_digits);

/// Decimal digits to add to a context so an argument of magnitude |v| can be
/// reduced modulo 2*pi without losing target digits.
int reduction_guard_digits(const Real& v);

}  // namespace qrke
