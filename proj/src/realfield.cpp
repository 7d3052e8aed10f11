#include "qrke/realfield.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "qrke/error.hpp"

namespace qrke {

double log10_of(const BigInt& n) {
  if (sgn(n) <= 0) {
    throw DomainError("log10 of a non-positive integer");
  }
  long exp2 = 0;
  const double mantissa = mpz_get_d_2exp(&exp2, n.get_mpz_t());
  return std::log10(mantissa) + static_cast<double>(exp2) * std::log10(2.0);
}

// ---------------------------------------------------------------------------
// PrecisionCtx

PrecisionCtx::PrecisionCtx(int digits) : digits_(digits) {
  if (digits < kMinDigits) {
    throw ParameterError("precision context needs at least " +
                         std::to_string(kMinDigits) + " digits, got " +
                         std::to_string(digits));
  }
}

mpfr_prec_t PrecisionCtx::bits_for(int digits) noexcept {
  // log2(10) = 3.321928...; the +2 keeps D-digit decimal round trips exact.
  return static_cast<mpfr_prec_t>(std::ceil(digits * 3.3219280948873623)) + 2;
}

// ---------------------------------------------------------------------------
// Real

Real::Real(mpfr_prec_t bits, int digits) : digits_(digits) {
  mpfr_init2(value_, bits);
  mpfr_set_zero(value_, 1);
}

Real::Real(const PrecisionCtx& ctx) : Real(ctx.bits(), ctx.digits()) {}

Real::Real(long value, const PrecisionCtx& ctx) : Real(ctx) {
  mpfr_set_si(value_, value, MPFR_RNDN);
}

Real::Real(const BigInt& value, const PrecisionCtx& ctx) : Real(ctx) {
  mpfr_set_z(value_, value.get_mpz_t(), MPFR_RNDN);
}

Real::Real(const Real& other) : digits_(other.digits_) {
  mpfr_init2(value_, mpfr_get_prec(other.value_));
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept : digits_(other.digits_) {
  mpfr_init2(value_, MPFR_PREC_MIN);
  mpfr_swap(value_, other.value_);
}

Real& Real::operator=(const Real& other) {
  if (this != &other) {
    mpfr_set_prec(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
    digits_ = other.digits_;
  }
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  mpfr_swap(value_, other.value_);
  std::swap(digits_, other.digits_);
  return *this;
}

Real::~Real() { mpfr_clear(value_); }

Real Real::rounded(const PrecisionCtx& ctx) const {
  Real out(ctx);
  mpfr_set(out.value_, value_, MPFR_RNDN);
  return out;
}

Real Real::operator-() const {
  Real out(*this);
  mpfr_neg(out.value_, out.value_, MPFR_RNDN);
  return out;
}

Real Real::abs() const {
  Real out(*this);
  mpfr_abs(out.value_, out.value_, MPFR_RNDN);
  return out;
}

namespace {

Real wider_of(const Real& a, const Real& b) {
  return Real(PrecisionCtx(std::max(a.digits(), b.digits())));
}

}  // namespace

Real operator+(const Real& a, const Real& b) {
  Real out = wider_of(a, b);
  mpfr_add(out.value_, a.value_, b.value_, MPFR_RNDN);
  return out;
}

Real operator-(const Real& a, const Real& b) {
  Real out = wider_of(a, b);
  mpfr_sub(out.value_, a.value_, b.value_, MPFR_RNDN);
  return out;
}

Real operator*(const Real& a, const Real& b) {
  Real out = wider_of(a, b);
  mpfr_mul(out.value_, a.value_, b.value_, MPFR_RNDN);
  return out;
}

Real operator/(const Real& a, const Real& b) {
  Real out = wider_of(a, b);
  mpfr_div(out.value_, a.value_, b.value_, MPFR_RNDN);
  return out;
}

Real operator*(const Real& a, const BigInt& b) {
  Real out(a.ctx());
  mpfr_mul_z(out.value_, a.value_, b.get_mpz_t(), MPFR_RNDN);
  return out;
}

Real operator*(const Real& a, long b) {
  Real out(a.ctx());
  mpfr_mul_si(out.value_, a.value_, b, MPFR_RNDN);
  return out;
}

std::partial_ordering operator<=>(const Real& a, const Real& b) {
  if (mpfr_unordered_p(a.value_, b.value_)) {
    return std::partial_ordering::unordered;
  }
  const int c = mpfr_cmp(a.value_, b.value_);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater
                        : std::partial_ordering::equivalent);
}

std::partial_ordering operator<=>(const Real& a, long b) {
  if (mpfr_nan_p(a.value_)) {
    return std::partial_ordering::unordered;
  }
  const int c = mpfr_cmp_si(a.value_, b);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater
                        : std::partial_ordering::equivalent);
}

// ---------------------------------------------------------------------------
// Decimal conversion

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// |effective decimal exponent| beyond this is refused; MPFR's default
// exponent range ends near 10^(3.2e8).
constexpr long kMaxDecimalExponent = 100'000'000;

struct MpfrString {
  char* text = nullptr;
  ~MpfrString() {
    if (text != nullptr) {
      mpfr_free_str(text);
    }
  }
};

// Significand digits (no sign) and the exponent such that
// |v| = 0.DIGITS * 10^exponent.
std::pair<std::string, long> raw_digits(mpfr_srcptr v, int count, mpfr_rnd_t rnd) {
  mpfr_exp_t exponent = 0;
  MpfrString s;
  if (count >= 2) {
    s.text = mpfr_get_str(nullptr, &exponent, 10, static_cast<size_t>(count), v, rnd);
  } else {
    // Older MPFR releases refuse n = 1; take two digits and round by hand.
    s.text = mpfr_get_str(nullptr, &exponent, 10, 2, v, rnd);
  }
  if (s.text == nullptr) {
    throw DomainError("cannot convert value to decimal");
  }
  std::string digits(s.text);
  if (!digits.empty() && digits.front() == '-') {
    digits.erase(0, 1);
  }
  if (count == 1) {
    int lead = digits[0] - '0';
    const int next = digits[1] - '0';
    const bool round_up =
        rnd == MPFR_RNDN ? (next > 5 || (next == 5 && (lead % 2 == 1))) : false;
    if (round_up) {
      ++lead;
    }
    if (lead == 10) {
      digits = "1";
      ++exponent;
    } else {
      digits = std::string(1, static_cast<char>('0' + lead));
    }
  }
  return {digits, static_cast<long>(exponent)};
}

}  // namespace

Real from_decimal(std::string_view text, const PrecisionCtx& ctx) {
  const auto fail = [&](const char* why) -> ParseError {
    return ParseError("malformed decimal '" + std::string(text.substr(0, 64)) + "': " + why);
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  bool negative = false;
  if (i < n && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  while (i < n && is_digit(text[i])) {
    digits.push_back(text[i++]);
  }
  if (digits.empty()) {
    throw fail("expected digits");
  }
  long fraction_len = 0;
  if (i < n && text[i] == '.') {
    ++i;
    while (i < n && is_digit(text[i])) {
      digits.push_back(text[i++]);
      ++fraction_len;
    }
    if (fraction_len == 0) {
      throw fail("expected fraction digits");
    }
  }
  long exponent = 0;
  if (i < n && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < n && (text[i] == '+' || text[i] == '-')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    std::size_t exp_digits = 0;
    while (i < n && is_digit(text[i])) {
      if (exp_digits >= 9) {
        throw fail("exponent out of range");
      }
      exponent = exponent * 10 + (text[i++] - '0');
      ++exp_digits;
    }
    if (exp_digits == 0) {
      throw fail("expected exponent digits");
    }
    if (exp_negative) {
      exponent = -exponent;
    }
  }
  if (i != n) {
    throw fail("trailing characters");
  }

  exponent -= fraction_len;
  const auto first = digits.find_first_not_of('0');
  if (first == std::string::npos) {
    return Real(ctx);
  }
  digits.erase(0, first);
  const auto last = digits.find_last_not_of('0');
  exponent += static_cast<long>(digits.size() - 1 - last);
  digits.erase(last + 1);

  // Round to ctx.digits significant digits, ties to even.
  const std::size_t keep = static_cast<std::size_t>(ctx.digits());
  if (digits.size() > keep) {
    const char next = digits[keep];
    const bool rest_nonzero =
        digits.find_first_not_of('0', keep + 1) != std::string::npos;
    const bool odd = ((digits[keep - 1] - '0') % 2) == 1;
    exponent += static_cast<long>(digits.size() - keep);
    digits.erase(keep);
    if (next > '5' || (next == '5' && (rest_nonzero || odd))) {
      std::size_t pos = keep;
      while (pos > 0) {
        --pos;
        if (digits[pos] == '9') {
          digits[pos] = '0';
        } else {
          ++digits[pos];
          break;
        }
      }
      if (digits[0] == '0') {
        digits.insert(digits.begin(), '1');
        digits.pop_back();
        ++exponent;
      }
    }
  }
  const long leading_exponent = exponent + static_cast<long>(digits.size()) - 1;
  if (leading_exponent > kMaxDecimalExponent || leading_exponent < -kMaxDecimalExponent) {
    throw fail("exponent out of range");
  }

  Real out(ctx);
  const std::string normalized = digits + "e" + std::to_string(exponent);
  if (mpfr_set_str(out.raw(), normalized.c_str(), 10, MPFR_RNDN) != 0) {
    throw fail("rejected by backend");
  }
  if (negative) {
    mpfr_neg(out.raw(), out.raw(), MPFR_RNDN);
  }
  return out;
}

std::string to_decimal(const Real& v, int max_digits) {
  if (max_digits < 1 || max_digits > v.digits()) {
    throw ParameterError("to_decimal: max_digits must lie in [1, " +
                         std::to_string(v.digits()) + "]");
  }
  if (!mpfr_number_p(v.raw())) {
    throw DomainError("to_decimal: value is not finite");
  }
  if (v.is_zero()) {
    return "0e0";
  }
  auto [digits, exponent] = raw_digits(v.raw(), max_digits, MPFR_RNDN);
  std::string out;
  out.reserve(digits.size() + 16);
  if (v.sign() < 0) {
    out.push_back('-');
  }
  out.push_back(digits[0]);
  if (digits.size() > 1) {
    out.push_back('.');
    out.append(digits, 1, std::string::npos);
  }
  out.push_back('e');
  out.append(std::to_string(exponent - 1));
  return out;
}

bool is_canonical_decimal(std::string_view text) {
  if (text == "0e0") {
    return true;
  }
  std::size_t i = 0;
  const std::size_t n = text.size();
  if (i < n && text[i] == '-') {
    ++i;
  }
  if (i >= n || text[i] < '1' || text[i] > '9') {
    return false;
  }
  ++i;
  if (i < n && text[i] == '.') {
    ++i;
    const std::size_t start = i;
    while (i < n && is_digit(text[i])) {
      ++i;
    }
    if (i == start) {
      return false;
    }
  }
  if (i >= n || text[i] != 'e') {
    return false;
  }
  ++i;
  if (i < n && text[i] == '-') {
    ++i;
  }
  const std::size_t exp_start = i;
  while (i < n && is_digit(text[i])) {
    ++i;
  }
  const std::size_t exp_len = i - exp_start;
  if (i != n || exp_len == 0 || exp_len > 9) {
    return false;
  }
  if (text[exp_start] == '0') {
    // "e0" only, and never "e-0".
    return exp_len == 1 && text[exp_start - 1] == 'e';
  }
  return true;
}

std::string significant_digits(const Real& v, int count) {
  if (count < 1) {
    throw ParameterError("significant_digits: count must be positive");
  }
  if (v.is_zero()) {
    return std::string(static_cast<std::size_t>(count), '0');
  }
  const Real magnitude = v.abs();
  return raw_digits(magnitude.raw(), count, MPFR_RNDZ).first;
}

// ---------------------------------------------------------------------------
// Constants

namespace {

class ConstantCache {
 public:
  using Compute = void (*)(mpfr_ptr);

  explicit ConstantCache(Compute compute) : compute_(compute) {}

  const Real& get(const PrecisionCtx& ctx) {
    std::lock_guard lock(mutex_);
    auto it = values_.find(ctx.digits());
    if (it == values_.end()) {
      auto value = std::make_unique<Real>(ctx);
      compute_(value->raw());
      it = values_.emplace(ctx.digits(), std::move(value)).first;
    }
    return *it->second;
  }

 private:
  Compute compute_;
  std::mutex mutex_;
  std::map<int, std::unique_ptr<Real>> values_;
};

void compute_pi(mpfr_ptr out) { mpfr_const_pi(out, MPFR_RNDN); }

void compute_two_pi(mpfr_ptr out) {
  mpfr_const_pi(out, MPFR_RNDN);
  mpfr_mul_2ui(out, out, 1, MPFR_RNDN);
}

ConstantCache& pi_cache() {
  static ConstantCache cache(&compute_pi);
  return cache;
}

ConstantCache& two_pi_cache() {
  static ConstantCache cache(&compute_two_pi);
  return cache;
}

// Internal digits added on top of every trig evaluation.
constexpr int kTrigGuardDigits = 3;

}  // namespace

const Real& pi(const PrecisionCtx& ctx) { return pi_cache().get(ctx); }

const Real& two_pi(const PrecisionCtx& ctx) { return two_pi_cache().get(ctx); }

// ---------------------------------------------------------------------------
// Trigonometry

Real arccos(const Real& v, const PrecisionCtx& ctx) {
  if (mpfr_cmpabs_ui(v.raw(), 1) > 0) {
    throw DomainError("arccos argument outside [-1, 1]");
  }
  const PrecisionCtx work = ctx.widened(kTrigGuardDigits);
  Real out(work);
  mpfr_acos(out.raw(), v.raw(), MPFR_RNDN);
  return out.rounded(ctx);
}

int reduction_guard_digits(const Real& v) {
  if (v.is_zero() || mpfr_cmpabs_ui(v.raw(), 6) < 0) {
    return 1;
  }
  // |v| < 2^exp, so |v| / 2pi < 10^(exp * log10(2)).
  const long exp2 = mpfr_get_exp(v.raw());
  return static_cast<int>(std::ceil(static_cast<double>(exp2) * 0.30102999566398120)) + 1;
}

Real mod_two_pi(const Real& v, const PrecisionCtx& ctx, int guard_digits) {
  if (guard_digits < 0) {
    throw ParameterError("mod_two_pi: guard_digits must be non-negative");
  }
  if (!mpfr_number_p(v.raw())) {
    throw DomainError("mod_two_pi: value is not finite");
  }
  const PrecisionCtx work = ctx.widened(guard_digits + kTrigGuardDigits);
  const Real& period = two_pi(work);

  Real quotient(work);
  mpfr_div(quotient.raw(), v.raw(), period.raw(), MPFR_RNDN);
  mpfr_floor(quotient.raw(), quotient.raw());
  if (!quotient.is_zero()) {
    BigInt q;
    mpfr_get_z(q.get_mpz_t(), quotient.raw(), MPFR_RNDN);
    if (decimal_length(q) > static_cast<std::size_t>(guard_digits)) {
      throw PrecisionError("mod_two_pi: " + std::to_string(guard_digits) +
                           " guard digits cannot cover a quotient of " +
                           std::to_string(decimal_length(q)) + " digits");
    }
  }

  Real reduced(work);
  // reduced = quotient * period - v, then negated: one rounding.
  mpfr_fms(reduced.raw(), quotient.raw(), period.raw(), v.raw(), MPFR_RNDN);
  mpfr_neg(reduced.raw(), reduced.raw(), MPFR_RNDN);
  if (reduced.sign() < 0) {
    mpfr_add(reduced.raw(), reduced.raw(), period.raw(), MPFR_RNDN);
  } else if (mpfr_cmp(reduced.raw(), period.raw()) >= 0) {
    mpfr_sub(reduced.raw(), reduced.raw(), period.raw(), MPFR_RNDN);
  }
  return reduced.rounded(ctx);
}

Real cos(const Real& v, const PrecisionCtx& ctx) {
  const PrecisionCtx work = ctx.widened(kTrigGuardDigits);
  const Real reduced = mod_two_pi(v, work, reduction_guard_digits(v));
  Real out(work);
  mpfr_cos(out.raw(), reduced.raw(), MPFR_RNDN);
  return out.rounded(ctx);
}

// ---------------------------------------------------------------------------
// Integer rounding and digit agreement

BigInt round_to_integer(const Real& v) {
  if (!mpfr_number_p(v.raw())) {
    throw DomainError("round_to_integer: value is not finite");
  }
  Real tmp(v);
  mpfr_round(tmp.raw(), v.raw());
  BigInt out;
  mpfr_get_z(out.get_mpz_t(), tmp.raw(), MPFR_RNDN);
  return out;
}

Real distance_to_integer(const Real& v) {
  Real nearest(v);
  mpfr_round(nearest.raw(), v.raw());
  Real out(v);
  mpfr_sub(out.raw(), v.raw(), nearest.raw(), MPFR_RNDN);
  mpfr_abs(out.raw(), out.raw(), MPFR_RNDN);
  return out;
}

int agreement_digits(const Real& a, const Real& b) {
  const int limit = std::min(a.digits(), b.digits());
  if (!mpfr_number_p(a.raw()) || !mpfr_number_p(b.raw())) {
    return 0;
  }
  if (a == b) {
    return limit;
  }
  if (a.sign() * b.sign() <= 0) {
    return 0;
  }
  const Real diff = (a - b).abs();
  const Real scale = mpfr_cmpabs(a.raw(), b.raw()) >= 0 ? a.abs() : b.abs();
  mpfr_t ratio;
  mpfr_init2(ratio, 64);
  mpfr_div(ratio, diff.raw(), scale.raw(), MPFR_RNDN);
  mpfr_log10(ratio, ratio, MPFR_RNDN);
  const double lg = mpfr_get_d(ratio, MPFR_RNDN);
  mpfr_clear(ratio);
  const double agreed = std::floor(-lg);
  if (agreed <= 0.0) {
    return 0;
  }
  return static_cast<int>(std::min<double>(agreed, limit));
}

int common_prefix_digits(const Real& a, const Real& b, int max_digits) {
  const int count = std::min({max_digits, a.digits(), b.digits()});
  if (a.sign() != b.sign()) {
    return 0;
  }
  if (a.is_zero()) {
    return count;
  }
  const auto [da, ea] = raw_digits(a.raw(), count, MPFR_RNDZ);
  const auto [db, eb] = raw_digits(b.raw(), count, MPFR_RNDZ);
  if (ea != eb) {
    return 0;
  }
  int same = 0;
  while (same < count && da[static_cast<std::size_t>(same)] == db[static_cast<std::size_t>(same)]) {
    ++same;
  }
  return same;
}

}  // namespace qrke
