#include "qrke/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>

#include "qrke/chebyshev.hpp"
#include "qrke/error.hpp"
#include "qrke/kernels.hpp"

namespace qrke::attack {

Real arccos_ratio(const Real& y, const Real& x, const PrecisionCtx& ctx) {
  const auto p = sieve_params(y, x, ctx);
  return p.d;
}

SieveParams sieve_params(const Real& y, const Real& x, const PrecisionCtx& ctx) {
  const PrecisionCtx work = ctx.widened(10);
  const Real ax = arccos(x.rounded(work), work);
  if (chebyshev::is_degenerate(ax, ctx)) {
    throw DegenerateValueError("arccos(x) is too close to 0 for the arccos ratio");
  }
  const Real ay = arccos(y.rounded(work), work);
  return SieveParams{(ay / ax).rounded(ctx), (two_pi(work) / ax).rounded(ctx)};
}

BigInt extended_gcd(const BigInt& a, const BigInt& b, BigInt& s, BigInt& t) {
  BigInt old_r = a, r = b;
  BigInt old_s = 1, cur_s = 0;
  BigInt old_t = 0, cur_t = 1;
  while (r != 0) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), old_r.get_mpz_t(), r.get_mpz_t());
    BigInt next = old_r - q * r;
    old_r = r;
    r = next;
    next = old_s - q * cur_s;
    old_s = cur_s;
    cur_s = next;
    next = old_t - q * cur_t;
    old_t = cur_t;
    cur_t = next;
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  s = old_s;
  t = old_t;
  return old_r;
}

namespace {

BigInt mod_floor(const BigInt& v, const BigInt& m) {
  BigInt r;
  mpz_fdiv_r(r.get_mpz_t(), v.get_mpz_t(), m.get_mpz_t());
  return r;
}

// Residue classes returned per congruence are capped; a huge gcd(a, M)
// would otherwise flood the candidate list.
constexpr std::size_t kMaxSolutionsPerCongruence = 4096;

double log10_abs(const Real& v) {
  if (v.is_zero()) {
    return -std::numeric_limits<double>::infinity();
  }
  long exp = 0;
  const double mant = mpfr_get_d_2exp(&exp, v.raw(), MPFR_RNDN);
  return std::log10(std::fabs(mant)) + static_cast<double>(exp) * std::log10(2.0);
}

struct Pending {
  double distance_log10;  // log10 of the distance to the nearest integer
  double magnitude_log10;
  BigInt value;
};

class CandidatePool {
 public:
  explicit CandidatePool(const PrecisionCtx& ctx) : filter_log10_(-(ctx.digits() / 2.0)) {}

  void add(const Real& real) {
    ++generated_;
    magnitudes_.push_back(log10_abs(real));
    if (real.sign() < 0) {
      return;
    }
    BigInt value = round_to_integer(real);
    const double distance = log10_abs(distance_to_integer(real));
    // The same integer can be reached from several (sign, k) pairs; keep the
    // closest approach.
    const auto [it, fresh] = seen_.try_emplace(value, pending_.size());
    if (!fresh) {
      Pending& prior = pending_[it->second];
      if (distance < prior.distance_log10) {
        prior.distance_log10 = distance;
        prior.magnitude_log10 = magnitudes_.back();
      }
      return;
    }
    pending_.push_back({distance, magnitudes_.back(), std::move(value)});
  }

  AttackResult finish(const Real& x, const Real& y, const PrecisionCtx& ctx, bool parallel) {
    std::sort(pending_.begin(), pending_.end(),
              [](const Pending& a, const Pending& b) { return a.distance_log10 < b.distance_log10; });
    std::vector<BigInt> chosen;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      if (i < kEvidenceCandidates || pending_[i].distance_log10 < filter_log10_) {
        chosen.push_back(pending_[i].value);
      }
    }
    const auto checks = parallel ? kernels::omp::verify_candidates(chosen, x, y, ctx)
                                 : kernels::serial::verify_candidates(chosen, x, y, ctx);
    AttackResult out;
    out.generated = generated_;
    out.work = chosen.size();
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      out.candidates.push_back({chosen[i], checks[i].agreement, checks[i].verified});
      if (checks[i].verified && (!out.verified || chosen[i] < *out.verified)) {
        out.verified = chosen[i];
      }
      if (!out.best || checks[i].agreement > out.best_agreement) {
        out.best = chosen[i];
        out.best_agreement = checks[i].agreement;
      }
    }
    out.success = out.verified.has_value();
    if (!magnitudes_.empty()) {
      auto mid = magnitudes_.begin() + static_cast<std::ptrdiff_t>(magnitudes_.size() / 2);
      std::nth_element(magnitudes_.begin(), mid, magnitudes_.end());
      out.median_log10 = *mid;
    }
    return out;
  }

 private:
  double filter_log10_;
  std::uint64_t generated_ = 0;
  std::vector<double> magnitudes_;
  std::vector<Pending> pending_;
  std::map<BigInt, std::size_t> seen_;
};

void require_open_interval(const Real& x, const Real& y) {
  if (mpfr_cmpabs_ui(x.raw(), 1) >= 0 || mpfr_cmpabs_ui(y.raw(), 1) >= 0) {
    throw DomainError("attack inputs must lie strictly inside (-1, 1)");
  }
}

}  // namespace

std::vector<BigInt> solve_modular_linear(const BigInt& a, const BigInt& b, const BigInt& m) {
  if (m < 2) {
    throw ParameterError("solve_modular_linear: modulus must be >= 2");
  }
  const BigInt ar = mod_floor(a, m);
  const BigInt br = mod_floor(b, m);
  BigInt s, t;
  const BigInt g = extended_gcd(ar, m, s, t);
  std::vector<BigInt> out;
  if (mod_floor(br, g) != 0) {
    return out;
  }
  const BigInt step = m / g;
  const BigInt k0 = mod_floor(s * (br / g), step);
  const std::size_t count =
      g.fits_ulong_p() ? std::min<std::size_t>(g.get_ui(), kMaxSolutionsPerCongruence)
                       : kMaxSolutionsPerCongruence;
  out.reserve(count);
  BigInt k = k0;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(k);
    k += step;
  }
  return out;
}

BigInt default_modulus(const BigInt& exponent_bound) {
  return pow10(decimal_length(exponent_bound));
}

AttackResult run_sieve_attack(const Real& x, const Real& y, const PrecisionCtx& ctx,
                              const BigInt& modulus, SieveOptions opts) {
  require_open_interval(x, y);
  if (modulus < 2) {
    throw ParameterError("sieve modulus must be >= 2");
  }
  if (opts.search_width < 0) {
    throw ParameterError("search width must be >= 0");
  }
  const auto [d, e] = sieve_params(y, x, ctx);
  // Scaled products carry decimal_length(M) integer digits; keep ctx.digits
  // fractional digits on top of them.
  const PrecisionCtx work = ctx.widened(static_cast<int>(decimal_length(modulus)) + 10);
  const Real dw = d.rounded(work);
  const Real ew = e.rounded(work);
  const BigInt a = round_to_integer(ew * modulus);
  CandidatePool pool(ctx);
  for (int sigma : {1, -1}) {
    const BigInt b = round_to_integer(dw * modulus * static_cast<long>(-sigma));
    const Real base = sigma > 0 ? dw : -dw;
    for (std::int64_t j = -opts.search_width; j <= opts.search_width; ++j) {
      for (const BigInt& k : solve_modular_linear(a, b + j, modulus)) {
        pool.add(base + ew * k);
      }
    }
  }
  return pool.finish(x.rounded(ctx), y.rounded(ctx), ctx, opts.parallel);
}

AttackResult k_scan_attack(const Real& x, const Real& y, const PrecisionCtx& ctx,
                           std::uint64_t k_max) {
  require_open_interval(x, y);
  const auto [d, e] = sieve_params(y, x, ctx);
  CandidatePool pool(ctx);
  for (std::uint64_t k = 0; k <= k_max; ++k) {
    const Real ek = e * BigInt(static_cast<unsigned long>(k));
    pool.add(d + ek);
    pool.add(ek - d);
  }
  return pool.finish(x.rounded(ctx), y.rounded(ctx), ctx, false);
}

AttackResult brute_force_combinations(const strategy::FunctionSet& fs, const Real& x,
                                      const Real& y, const PrecisionCtx& ctx, bool parallel) {
  require_open_interval(x, y);
  const BigInt total = strategy::combination_count(fs);
  if (total > BigInt(static_cast<unsigned long>(kBruteForceGuard))) {
    throw ParameterError("brute force refused: " + total.get_str() +
                         " combinations exceed the 2^24 guard");
  }
  const auto count = total.get_ui();
  const Real xr = x.rounded(ctx);
  const Real yr = y.rounded(ctx);
  const auto matches = parallel ? kernels::omp::brute_force_scan(fs, xr, yr, ctx, 0, count)
                                : kernels::serial::brute_force_scan(fs, xr, yr, ctx, 0, count);
  AttackResult out;
  out.work = count;
  out.generated = count;
  for (const auto& m : matches) {
    const BigInt value = strategy::raw_exponent(kernels::combination_at(fs, m.index));
    out.candidates.push_back({value, m.agreement, true});
    if (!out.verified || value < *out.verified) {
      out.verified = value;
    }
    if (!out.best || m.agreement > out.best_agreement) {
      out.best = value;
      out.best_agreement = m.agreement;
    }
  }
  out.success = out.verified.has_value();
  return out;
}

// ---------------------------------------------------------------------------
// Binary64-scale divergence

namespace {

std::vector<BigInt> power_basis_coefficients(std::uint64_t n) {
  static std::mutex mutex;
  static std::map<std::uint64_t, std::vector<BigInt>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) {
      return it->second;
    }
  }
  std::vector<BigInt> prev{1};     // T_0
  std::vector<BigInt> cur{0, 1};   // T_1
  if (n == 0) {
    cur = prev;
  }
  for (std::uint64_t i = 2; i <= n; ++i) {
    std::vector<BigInt> next(i + 1);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      next[k + 1] += 2 * cur[k];
    }
    for (std::size_t k = 0; k < prev.size(); ++k) {
      next[k] -= prev[k];
    }
    prev = std::move(cur);
    cur = std::move(next);
  }
  std::lock_guard lock(mutex);
  cache.emplace(n, cur);
  return cur;
}

Real evaluate(Evaluator ev, std::uint64_t n, const Real& v, const PrecisionCtx& ctx) {
  if (ev == Evaluator::coefficients) {
    return t_power_basis(n, v, ctx);
  }
  // Rounding may push an inner value a hair outside [-1, 1].
  Real clamped = v.rounded(ctx);
  if (mpfr_cmpabs_ui(clamped.raw(), 1) > 0) {
    clamped = Real(clamped.sign(), ctx);
  }
  return chebyshev::t_recurrence(n, clamped, ctx);
}

}  // namespace

Real t_power_basis(std::uint64_t n, const Real& x, const PrecisionCtx& ctx) {
  if (n > kMaxPowerBasisDegree) {
    throw ParameterError("power-basis evaluation is limited to degree " +
                         std::to_string(kMaxPowerBasisDegree));
  }
  const auto coeffs = power_basis_coefficients(n);
  const Real xr = x.rounded(ctx);
  Real acc(coeffs.back(), ctx);
  for (std::size_t k = coeffs.size() - 1; k-- > 0;) {
    mpfr_mul(acc.raw(), acc.raw(), xr.raw(), MPFR_RNDN);
    mpfr_add_z(acc.raw(), acc.raw(), coeffs[k].get_mpz_t(), MPFR_RNDN);
  }
  return acc;
}

namespace {

// Hardware binary64: coefficients rounded to nearest double, overflow to
// infinity exactly as a double-typed implementation would see it.
double to_binary64(const BigInt& v) {
  mpfr_t t;
  mpfr_init2(t, 53);
  mpfr_set_z(t, v.get_mpz_t(), MPFR_RNDN);
  const double d = mpfr_get_d(t, MPFR_RNDN);
  mpfr_clear(t);
  return d;
}

double evaluate_binary64(Evaluator ev, std::uint64_t n, double v) {
  if (ev == Evaluator::coefficients) {
    const auto coeffs = power_basis_coefficients(n);
    double acc = to_binary64(coeffs.back());
    for (std::size_t k = coeffs.size() - 1; k-- > 0;) {
      acc = acc * v + to_binary64(coeffs[k]);
    }
    return acc;
  }
  v = std::clamp(v, -1.0, 1.0);
  if (n == 0) {
    return 1.0;
  }
  double prev = 1.0;
  double cur = v;
  for (std::uint64_t i = 2; i <= n; ++i) {
    const double next = 2.0 * v * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace

DivergenceReport double_precision_divergence(std::uint64_t r, std::uint64_t s, const Real& x,
                                             Evaluator evaluator, int digits,
                                             int control_digits) {
  if (r == 0 || s == 0 || r * s > 1'000'000 || r > 1'000'000 || s > 1'000'000) {
    throw ParameterError("double_precision_divergence needs 1 <= r*s <= 10^6");
  }
  DivergenceReport report;
  report.r = r;
  report.s = s;
  report.degree = r * s;
  report.digits = digits;
  report.control_digits = control_digits;

  Real xl = x.rounded(PrecisionCtx(digits));
  if (digits == kBinary64Digits) {
    const double xd = mpfr_get_d(x.raw(), MPFR_RNDN);
    const double rs = evaluate_binary64(evaluator, r, evaluate_binary64(evaluator, s, xd));
    const double sr = evaluate_binary64(evaluator, s, evaluate_binary64(evaluator, r, xd));
    report.sign_mismatch = std::isnan(rs) || std::isnan(sr) || std::signbit(rs) != std::signbit(sr);
    if (std::isfinite(rs) && std::isfinite(sr)) {
      const PrecisionCtx exact(17);
      Real a(exact);
      Real b(exact);
      mpfr_set_d(a.raw(), rs, MPFR_RNDN);
      mpfr_set_d(b.raw(), sr, MPFR_RNDN);
      report.agreement = std::min(agreement_digits(a, b), digits);
      report.first_disagreeing_digit = std::min(common_prefix_digits(a, b, digits), digits) + 1;
    } else {
      report.agreement = 0;
      report.first_disagreeing_digit = rs == sr ? digits + 1 : 1;
    }
    mpfr_set_d(xl.raw(), xd, MPFR_RNDN);
  } else {
    const PrecisionCtx low(digits);
    const Real rs = evaluate(evaluator, r, evaluate(evaluator, s, xl, low), low);
    const Real sr = evaluate(evaluator, s, evaluate(evaluator, r, xl, low), low);
    report.agreement = agreement_digits(rs, sr);
    report.first_disagreeing_digit = common_prefix_digits(rs, sr, digits) + 1;
    report.sign_mismatch = rs.sign() != sr.sign();
  }

  // Expanded coefficients of degree ~1000 cancel past 200 digits, so the
  // control always runs the recurrence.
  const PrecisionCtx high(control_digits);
  const Real xh = xl.rounded(high);
  const auto ctl = Evaluator::recurrence;
  report.control_agreement = agreement_digits(evaluate(ctl, r, evaluate(ctl, s, xh, high), high),
                                              evaluate(ctl, s, evaluate(ctl, r, xh, high), high));
  return report;
}

void write_attack_csv(std::ostream& out, const std::string& modulus, const AttackResult& result,
                      bool header) {
  if (header) {
    out << "M,candidate,agreement_digits,verified,work\n";
  }
  for (const auto& c : result.candidates) {
    out << modulus << ',' << c.value.get_str() << ',' << c.agreement << ','
        << (c.verified ? 1 : 0) << ',' << result.work << '\n';
  }
}

}  // namespace qrke::attack
