#pragma once

// Trial-level kernels. Each exists twice: kernels::serial is the reference
// implementation kept for testing, kernels::omp distributes independent
// trials over OpenMP threads. Both return results in input order, so their
// outputs compare equal element by element.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "qrke/bigint.hpp"
#include "qrke/chebyshev.hpp"
#include "qrke/realfield.hpp"
#include "qrke/strategy.hpp"

namespace qrke::kernels {

/// Combination with mixed-radix index `index` (digit i has radix w_i).
strategy::Combination combination_at(const strategy::FunctionSet& fs, std::uint64_t index);

/// Agreement needed to accept a candidate of degree `degree` as reproducing
/// a value known to ctx.digits digits: digits - ceil(log10 degree) - 5, at
/// least 1.
int verification_window(const BigInt& degree, const PrecisionCtx& ctx);

struct BruteMatch {
  std::uint64_t index = 0;
  int agreement = 0;

  friend bool operator==(const BruteMatch&, const BruteMatch&) = default;
};

struct Verification {
  int agreement = 0;
  bool verified = false;

  friend bool operator==(const Verification&, const Verification&) = default;
};

using DigitCounts = std::vector<std::array<std::uint64_t, 10>>;

namespace serial {

std::vector<double> log10_exponents(const std::vector<strategy::Combination>& draws);

/// compose_chain(chains[i], xs[i]); nullopt where the chain hit a degenerate
/// value.
std::vector<std::optional<Real>> evaluate_chains(const std::vector<chebyshev::ChainSpec>& chains,
                                                 const std::vector<Real>& xs,
                                                 const PrecisionCtx& ctx);

/// Combination indices in [begin, end) whose chain maps x to y within
/// verification_window.
std::vector<BruteMatch> brute_force_scan(const strategy::FunctionSet& fs, const Real& x,
                                         const Real& y, const PrecisionCtx& ctx,
                                         std::uint64_t begin, std::uint64_t end);

/// t_analytic(candidate, x) against y for every candidate.
std::vector<Verification> verify_candidates(const std::vector<BigInt>& candidates, const Real& x,
                                            const Real& y, const PrecisionCtx& ctx);

/// counts[p][d]: how many values have digit d at significant position p + 1.
DigitCounts digit_counts(const std::vector<Real>& values, int positions);

}  // namespace serial

namespace omp {

std::vector<double> log10_exponents(const std::vector<strategy::Combination>& draws);

std::vector<std::optional<Real>> evaluate_chains(const std::vector<chebyshev::ChainSpec>& chains,
                                                 const std::vector<Real>& xs,
                                                 const PrecisionCtx& ctx);

std::vector<BruteMatch> brute_force_scan(const strategy::FunctionSet& fs, const Real& x,
                                         const Real& y, const PrecisionCtx& ctx,
                                         std::uint64_t begin, std::uint64_t end);

std::vector<Verification> verify_candidates(const std::vector<BigInt>& candidates, const Real& x,
                                            const Real& y, const PrecisionCtx& ctx);

DigitCounts digit_counts(const std::vector<Real>& values, int positions);

}  // namespace omp

}  // namespace qrke::kernels
