#include "qrke/chebyshev.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "qrke/error.hpp"

namespace qrke::chebyshev {

ChainSpec::ChainSpec(std::vector<ChainStep> steps) : steps_(std::move(steps)) {
  for (const auto& step : steps_) {
    if (step.index < 2) {
      throw DomainError("chain index must be >= 2 (T_1 is the identity), got " +
                        std::to_string(step.index));
    }
    if (step.index > kMaxRecurrenceDegree) {
      throw DomainError("chain index exceeds the recurrence limit");
    }
  }
}

BigInt ChainSpec::degree() const {
  BigInt d = 1;
  for (const auto& step : steps_) {
    BigInt factor;
    mpz_ui_pow_ui(factor.get_mpz_t(), step.index, step.count);
    d *= factor;
  }
  return d;
}

ChainSpec ChainSpec::canonical() const {
  std::map<std::uint64_t, std::uint64_t> merged;
  for (const auto& step : steps_) {
    if (step.count > 0) {
      merged[step.index] += step.count;
    }
  }
  std::vector<ChainStep> out;
  out.reserve(merged.size());
  for (const auto& [index, count] : merged) {
    out.push_back({index, count});
  }
  return ChainSpec(std::move(out));
}

namespace {

void require_unit_interval(const Real& x, const char* who) {
  if (mpfr_cmpabs_ui(x.raw(), 1) > 0) {
    throw DomainError(std::string(who) + ": x outside [-1, 1]");
  }
}

// T_n(x) for x already at ctx precision; the caller owns the range checks.
void recurrence_in_place(std::uint64_t n, mpfr_srcptr x, mpfr_ptr out, mpfr_prec_t bits) {
  if (n == 0) {
    mpfr_set_ui(out, 1, MPFR_RNDN);
    return;
  }
  if (n == 1) {
    mpfr_set(out, x, MPFR_RNDN);
    return;
  }
  mpfr_t two_x, prev, cur;
  mpfr_inits2(bits, two_x, prev, cur, static_cast<mpfr_ptr>(nullptr));
  mpfr_mul_2ui(two_x, x, 1, MPFR_RNDN);
  mpfr_set_ui(prev, 1, MPFR_RNDN);
  mpfr_set(cur, x, MPFR_RNDN);
  for (std::uint64_t k = 2; k <= n; ++k) {
    // prev <- 2x * cur - prev, then swap so cur holds T_k.
    mpfr_fms(prev, two_x, cur, prev, MPFR_RNDN);
    mpfr_swap(prev, cur);
  }
  mpfr_set(out, cur, MPFR_RNDN);
  mpfr_clears(two_x, prev, cur, static_cast<mpfr_ptr>(nullptr));
}

}  // namespace

Real t_recurrence(std::uint64_t n, const Real& x, const PrecisionCtx& ctx) {
  require_unit_interval(x, "t_recurrence");
  if (n > kMaxRecurrenceDegree) {
    throw DomainError("t_recurrence: degree above " + std::to_string(kMaxRecurrenceDegree));
  }
  const Real xr = x.rounded(ctx);
  Real out(ctx);
  recurrence_in_place(n, xr.raw(), out.raw(), ctx.bits());
  return out;
}

namespace {

// 2x2 matrix over Real, row-major.
struct Mat2 {
  std::array<Real, 4> m;

  Mat2 operator*(const Mat2& o) const {
    return Mat2{{m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3],
                 m[2] * o.m[0] + m[3] * o.m[2], m[2] * o.m[1] + m[3] * o.m[3]}};
  }
};

}  // namespace

Real t_matrix(const BigInt& n, const Real& x, const PrecisionCtx& ctx) {
  require_unit_interval(x, "t_matrix");
  if (sgn(n) < 0) {
    throw DomainError("t_matrix: negative degree");
  }
  const Real xr = x.rounded(ctx);
  if (n == 0) {
    return Real(1, ctx);
  }
  // (T_n, T_{n+1})^T = A^n (T_0, T_1)^T with A = (0 1; -1 2x).
  Mat2 base{{Real(0, ctx), Real(1, ctx), Real(-1, ctx), xr * 2L}};
  Mat2 acc{{Real(1, ctx), Real(0, ctx), Real(0, ctx), Real(1, ctx)}};
  const std::size_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
  for (std::size_t i = bits; i-- > 0;) {
    acc = acc * acc;
    if (mpz_tstbit(n.get_mpz_t(), i) != 0) {
      acc = acc * base;
    }
  }
  return (acc.m[0] + acc.m[1] * xr).rounded(ctx);
}

Real t_analytic(const BigInt& n, const Real& x, const PrecisionCtx& ctx, int digit_cap) {
  if (sgn(n) < 0) {
    throw DomainError("t_analytic: negative degree");
  }
  if (mpfr_cmpabs_ui(x.raw(), 1) >= 0) {
    throw DomainError("t_analytic: x must lie strictly inside (-1, 1)");
  }
  if (n == 0) {
    return Real(1, ctx);
  }
  if (n == 1) {
    return x.rounded(ctx);
  }
  const int length = static_cast<int>(decimal_length(n));
  const long wide = static_cast<long>(ctx.digits()) + length + 20;
  if (wide > digit_cap) {
    throw PrecisionError("t_analytic: degree of " + std::to_string(length) +
                         " digits needs " + std::to_string(wide) +
                         " working digits, cap is " + std::to_string(digit_cap));
  }
  // n * arccos(x) carries `length` integer digits that the reduction cancels;
  // keep ctx.digits + 20 digits after it.
  const PrecisionCtx work(static_cast<int>(wide));
  const PrecisionCtx after_reduction = ctx.widened(20);
  const Real angle = arccos(x, work) * n;
  const Real reduced = mod_two_pi(angle, after_reduction, length);
  return cos(reduced, after_reduction).rounded(ctx);
}

bool is_degenerate(const Real& v, const PrecisionCtx& ctx) {
  mpfr_t tol, diff;
  mpfr_init2(tol, 64);
  mpfr_init2(diff, mpfr_get_prec(v.raw()));
  mpfr_set_ui(tol, 10, MPFR_RNDN);
  mpfr_pow_si(tol, tol, -(ctx.digits() / 2), MPFR_RNDN);
  bool degenerate = mpfr_cmpabs(v.raw(), tol) < 0;
  for (long c : {-1L, 1L}) {
    mpfr_sub_si(diff, v.raw(), c, MPFR_RNDN);
    degenerate = degenerate || mpfr_cmpabs(diff, tol) < 0;
  }
  mpfr_clears(tol, diff, static_cast<mpfr_ptr>(nullptr));
  return degenerate;
}

Real compose_chain(const ChainSpec& chain, const Real& x, const PrecisionCtx& ctx,
                   ChainOrder order) {
  if (mpfr_cmpabs_ui(x.raw(), 1) >= 0) {
    throw DomainError("compose_chain: x must lie strictly inside (-1, 1)");
  }
  const ChainSpec ordered = order == ChainOrder::canonical ? chain.canonical() : chain;
  Real value = x.rounded(ctx);
  Real next(ctx);
  for (const auto& step : ordered.steps()) {
    for (std::uint64_t rep = 0; rep < step.count; ++rep) {
      recurrence_in_place(step.index, value.raw(), next.raw(), ctx.bits());
      std::swap(value, next);
      if (is_degenerate(value, ctx)) {
        throw DegenerateValueError("compose_chain: intermediate value hit a fixed point of T");
      }
    }
  }
  return value;
}

int estimated_digit_loss(const BigInt& degree) {
  if (degree <= 1) {
    return 2;
  }
  return static_cast<int>(std::ceil(log10_of(degree))) + 2;
}

}  // namespace qrke::chebyshev
