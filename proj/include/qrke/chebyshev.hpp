#pragma once

// Chebyshev polynomials of the first kind, T_n(x) = cos(n * arccos(x)),
// evaluated three independent ways plus chained composition.
//
//   t_recurrence  T_n = 2x T_{n-1} - T_{n-2}, linear in n. Default for the
//                 small prime steps of chains.
//   t_matrix      powers of the companion matrix (0 1; -1 2x), O(log n)
//                 squarings. Oracle / benchmark path.
//   t_analytic    cos(n * arccos(x)) with the working precision widened by
//                 the decimal length of n. Default for big-integer degrees.
//
// Error budget: evaluating a composed degree d costs about log10(d) digits
// (one decimal digit per ~3.3 bits of degree) plus a small constant, see
// estimated_digit_loss().

#include <cstdint>
#include <span>
#include <vector>

#include "qrke/bigint.hpp"
#include "qrke/realfield.hpp"

namespace qrke::chebyshev {

inline constexpr std::uint64_t kMaxRecurrenceDegree = 1'000'000;

/// Hard cap on the working precision t_analytic may widen to.
inline constexpr int kDefaultAnalyticDigitCap = 200'000;

struct ChainStep {
  std::uint64_t index = 0;  // >= 2
  std::uint64_t count = 0;  // number of applications of T_index

  friend bool operator==(const ChainStep&, const ChainStep&) = default;
};

/// Ordered composition T_a^(count_a) o T_b^(count_b) o ...
class ChainSpec {
 public:
  ChainSpec() = default;
  /// Throws DomainError for an index < 2.
  explicit ChainSpec(std::vector<ChainStep> steps);

  std::span<const ChainStep> steps() const noexcept { return steps_; }

  /// prod index^count.
  BigInt degree() const;

  /// Steps sorted by ascending index with equal indices merged.
  ChainSpec canonical() const;

 private:
  std::vector<ChainStep> steps_;
};

enum class ChainOrder { canonical, as_given };

/// Throws DomainError unless -1 <= x <= 1 or n > kMaxRecurrenceDegree.
Real t_recurrence(std::uint64_t n, const Real& x, const PrecisionCtx& ctx);

Real t_matrix(const BigInt& n, const Real& x, const PrecisionCtx& ctx);

/// Requires -1 < x < 1 and n >= 0. Throws PrecisionError when the widened
/// working precision ctx.digits + len(n) + 20 exceeds `digit_cap`.
Real t_analytic(const BigInt& n, const Real& x, const PrecisionCtx& ctx,
                int digit_cap = kDefaultAnalyticDigitCap);

/// Applies each step's T_index `count` times with t_recurrence. Throws
/// DegenerateValueError when an intermediate value comes within
/// 10^-(digits/2) of -1, 0 or 1.
Real compose_chain(const ChainSpec& chain, const Real& x, const PrecisionCtx& ctx,
                   ChainOrder order = ChainOrder::canonical);

/// True if v lies within 10^-(ctx.digits/2) of -1, 0 or 1.
bool is_degenerate(const Real& v, const PrecisionCtx& ctx);

/// Decimal digits an evaluation of composed degree `degree` is expected to
/// lose: ceil(log10(degree)) + 2.
int estimated_digit_loss(const BigInt& degree);

}  // namespace qrke::chebyshev
