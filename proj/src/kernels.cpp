#include "qrke/kernels.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#include "qrke/error.hpp"

namespace qrke::kernels {

strategy::Combination combination_at(const strategy::FunctionSet& fs, std::uint64_t index) {
  strategy::Combination c;
  c.primes = fs.primes();
  c.reps.reserve(fs.size());
  for (auto w : fs.max_reps()) {
    c.reps.push_back(static_cast<std::uint32_t>(index % w));
    index /= w;
  }
  return c;
}

int verification_window(const BigInt& degree, const PrecisionCtx& ctx) {
  const int log_degree = degree <= 1 ? 0 : static_cast<int>(std::ceil(log10_of(degree)));
  return std::max(1, ctx.digits() - log_degree - 5);
}

namespace {

double log10_exponent(const strategy::Combination& c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.primes.size(); ++i) {
    sum += c.reps[i] * std::log10(static_cast<double>(c.primes[i]));
  }
  return sum;
}

std::optional<Real> evaluate_one(const chebyshev::ChainSpec& chain, const Real& x,
                                 const PrecisionCtx& ctx) {
  try {
    return chebyshev::compose_chain(chain, x, ctx);
  } catch (const DegenerateValueError&) {
    return std::nullopt;
  }
}

std::optional<BruteMatch> try_index(const strategy::FunctionSet& fs, const Real& x, const Real& y,
                                    const PrecisionCtx& ctx, std::uint64_t index) {
  const strategy::SecretSelection sel = combination_at(fs, index);
  const auto chain = strategy::chain_of(sel);
  const auto value = evaluate_one(chain, x, ctx);
  if (!value) {
    return std::nullopt;
  }
  const int agreement = agreement_digits(*value, y);
  if (agreement < verification_window(chain.degree(), ctx)) {
    return std::nullopt;
  }
  return BruteMatch{index, agreement};
}

Verification verify_one(const BigInt& candidate, const Real& x, const Real& y,
                        const PrecisionCtx& ctx) {
  if (sgn(candidate) < 0) {
    return {};
  }
  const Real value = chebyshev::t_analytic(candidate, x, ctx);
  const int agreement = agreement_digits(value, y);
  return Verification{agreement, agreement >= verification_window(candidate, ctx)};
}

void count_digits(const Real& v, int positions, DigitCounts& counts) {
  const std::string digits = significant_digits(v, positions);
  for (int p = 0; p < positions; ++p) {
    ++counts[p][digits[p] - '0'];
  }
}

void check_positions(const std::vector<Real>& values, int positions) {
  for (const auto& v : values) {
    if (positions > v.digits()) {
      throw ParameterError("digit_counts: more positions than the values carry");
    }
  }
}

// First exception thrown inside a parallel region, rethrown after it.
class ErrorSlot {
 public:
  template <typename F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) {
        error_ = std::current_exception();
      }
    }
  }
  void rethrow() const {
    if (error_) {
      std::rethrow_exception(error_);
    }
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

void check_range(std::uint64_t begin, std::uint64_t end, const strategy::FunctionSet& fs) {
  if (begin > end) {
    throw ParameterError("brute_force_scan: begin > end");
  }
  if (BigInt(static_cast<unsigned long>(end)) > strategy::combination_count(fs)) {
    throw ParameterError("brute_force_scan: range exceeds the combination count");
  }
}

}  // namespace

namespace serial {

std::vector<double> log10_exponents(const std::vector<strategy::Combination>& draws) {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& c : draws) {
    out.push_back(log10_exponent(c));
  }
  return out;
}

std::vector<std::optional<Real>> evaluate_chains(const std::vector<chebyshev::ChainSpec>& chains,
                                                 const std::vector<Real>& xs,
                                                 const PrecisionCtx& ctx) {
  if (chains.size() != xs.size()) {
    throw ParameterError("evaluate_chains: size mismatch");
  }
  std::vector<std::optional<Real>> out;
  out.reserve(chains.size());
  for (std::size_t i = 0; i < chains.size(); ++i) {
    out.push_back(evaluate_one(chains[i], xs[i], ctx));
  }
  return out;
}

std::vector<BruteMatch> brute_force_scan(const strategy::FunctionSet& fs, const Real& x,
                                         const Real& y, const PrecisionCtx& ctx,
                                         std::uint64_t begin, std::uint64_t end) {
  check_range(begin, end, fs);
  std::vector<BruteMatch> out;
  for (std::uint64_t i = begin; i < end; ++i) {
    if (auto m = try_index(fs, x, y, ctx, i)) {
      out.push_back(*m);
    }
  }
  return out;
}

std::vector<Verification> verify_candidates(const std::vector<BigInt>& candidates, const Real& x,
                                            const Real& y, const PrecisionCtx& ctx) {
  std::vector<Verification> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    out.push_back(verify_one(c, x, y, ctx));
  }
  return out;
}

DigitCounts digit_counts(const std::vector<Real>& values, int positions) {
  check_positions(values, positions);
  DigitCounts counts(static_cast<std::size_t>(positions), std::array<std::uint64_t, 10>{});
  for (const auto& v : values) {
    count_digits(v, positions, counts);
  }
  return counts;
}

}  // namespace serial

namespace omp {

std::vector<double> log10_exponents(const std::vector<strategy::Combination>& draws) {
  std::vector<double> out(draws.size());
  const auto n = static_cast<std::int64_t>(draws.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = log10_exponent(draws[i]);
  }
  return out;
}

std::vector<std::optional<Real>> evaluate_chains(const std::vector<chebyshev::ChainSpec>& chains,
                                                 const std::vector<Real>& xs,
                                                 const PrecisionCtx& ctx) {
  if (chains.size() != xs.size()) {
    throw ParameterError("evaluate_chains: size mismatch");
  }
  std::vector<std::optional<Real>> out(chains.size());
  ErrorSlot errors;
  const auto n = static_cast<std::int64_t>(chains.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    errors.run([&] { out[i] = evaluate_one(chains[i], xs[i], ctx); });
  }
  errors.rethrow();
  return out;
}

std::vector<BruteMatch> brute_force_scan(const strategy::FunctionSet& fs, const Real& x,
                                         const Real& y, const PrecisionCtx& ctx,
                                         std::uint64_t begin, std::uint64_t end) {
  check_range(begin, end, fs);
  std::vector<std::optional<BruteMatch>> hits(end - begin);
  ErrorSlot errors;
  const auto n = static_cast<std::int64_t>(end - begin);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    errors.run([&] { hits[i] = try_index(fs, x, y, ctx, begin + static_cast<std::uint64_t>(i)); });
  }
  errors.rethrow();
  std::vector<BruteMatch> out;
  for (const auto& h : hits) {
    if (h) {
      out.push_back(*h);
    }
  }
  return out;
}

std::vector<Verification> verify_candidates(const std::vector<BigInt>& candidates, const Real& x,
                                            const Real& y, const PrecisionCtx& ctx) {
  std::vector<Verification> out(candidates.size());
  ErrorSlot errors;
  const auto n = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    errors.run([&] { out[i] = verify_one(candidates[i], x, y, ctx); });
  }
  errors.rethrow();
  return out;
}

DigitCounts digit_counts(const std::vector<Real>& values, int positions) {
  check_positions(values, positions);
  DigitCounts counts(static_cast<std::size_t>(positions), std::array<std::uint64_t, 10>{});
  ErrorSlot errors;
  const auto n = static_cast<std::int64_t>(values.size());
#pragma omp parallel
  {
    DigitCounts local(static_cast<std::size_t>(positions), std::array<std::uint64_t, 10>{});
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      errors.run([&] { count_digits(values[i], positions, local); });
    }
#pragma omp critical(qrke_digit_counts)
    for (int p = 0; p < positions; ++p) {
      for (int d = 0; d < 10; ++d) {
        counts[p][d] += local[p][d];
      }
    }
  }
  errors.rethrow();
  return counts;
}

}  // namespace omp

}  // namespace qrke::kernels
