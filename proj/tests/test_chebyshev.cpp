#include <doctest.h>

#include "qrke/chebyshev.hpp"
#include "qrke/error.hpp"
#include "qrke/rng.hpp"

using namespace qrke;
using namespace qrke::chebyshev;

namespace {

// mpmath at 200 digits.
constexpr const char* kT123At03 = "0.22009845480037753246265559045248539724622321157907";
constexpr const char* kTHugeAt03 = "0.66074390101222608421939549504309893920293354832232";  // n=10^40+7
constexpr const char* kT30AtM071 = "-0.12269145807167475121419229800466071114590715654967";
constexpr const char* kT97 = "-0.53155139088347579417528492722767009024177927433129";  // x=0.123456789

Real dec(const char* text, int digits) { return from_decimal(text, PrecisionCtx(digits)); }

}  // namespace

TEST_CASE("small degrees match the closed forms") {
  const PrecisionCtx ctx(40);
  const Real x = dec("0.37", 40);
  CHECK(t_recurrence(0, x, ctx) == 1L);
  CHECK(agreement_digits(t_recurrence(1, x, ctx), x) >= 39);
  const Real two = x * x * 2L - dec("1", 40);
  CHECK(agreement_digits(t_recurrence(2, x, ctx), two) >= 38);
  const Real three = x * x * x * 4L - x * 3L;
  CHECK(agreement_digits(t_recurrence(3, x, ctx), three) >= 38);
}

TEST_CASE("three evaluators agree with reference values") {
  const PrecisionCtx ctx(50);
  const Real x = dec("0.3", 50);
  const Real ref = dec(kT123At03, 50);
  CHECK(agreement_digits(t_recurrence(123, x, ctx), ref) >= 46);
  CHECK(agreement_digits(t_matrix(BigInt(123), x, ctx), ref) >= 46);
  CHECK(agreement_digits(t_analytic(BigInt(123), x, ctx), ref) >= 46);
  CHECK(agreement_digits(t_recurrence(97, dec("0.123456789", 50), ctx), dec(kT97, 50)) >= 46);
}

TEST_CASE("analytic evaluation handles degrees beyond the recurrence") {
  const PrecisionCtx ctx(50);
  const BigInt n = pow10(40) + 7;
  // x must carry 40 more digits than the output, or n * dx swamps it.
  CHECK(agreement_digits(t_analytic(n, dec("0.3", 100), ctx), dec(kTHugeAt03, 50)) >= 45);
  CHECK(agreement_digits(t_analytic(n, dec("0.3", 50), ctx), dec(kTHugeAt03, 50)) < 20);
  CHECK_THROWS_AS(t_analytic(pow10(300), dec("0.3", 50), ctx, 200), PrecisionError);
}

TEST_CASE("chains compose in either order") {
  const PrecisionCtx ctx(60);
  const Real x = dec("-0.71", 60);
  const ChainSpec chain({{5, 1}, {2, 1}, {3, 1}});
  CHECK(chain.degree() == 30);
  const Real ref = dec(kT30AtM071, 50);
  CHECK(agreement_digits(compose_chain(chain, x, ctx), ref) >= 45);
  CHECK(agreement_digits(compose_chain(chain, x, ctx, ChainOrder::as_given), ref) >= 45);
  CHECK(chain.canonical().steps()[0].index == 2);
}

TEST_CASE("canonical merges equal indices") {
  const ChainSpec chain({{3, 1}, {2, 2}, {3, 2}});
  const ChainSpec canon = chain.canonical();
  REQUIRE(canon.steps().size() == 2);
  CHECK(canon.steps()[0] == ChainStep{2, 2});
  CHECK(canon.steps()[1] == ChainStep{3, 3});
  CHECK(canon.degree() == chain.degree());
  CHECK_THROWS_AS(ChainSpec({{1, 1}}), DomainError);
}

TEST_CASE("semigroup property over random inputs") {
  SeededRng rng(11);
  const PrecisionCtx ctx(80);
  for (int i = 0; i < 40; ++i) {
    const std::uint64_t p = 2 + rng.uniform(60);
    const std::uint64_t q = 2 + rng.uniform(60);
    const Real x = dec("0.4", 80) + Real(static_cast<long>(rng.uniform(1000)), ctx) / Real(2000L, ctx);
    const Real lhs = t_recurrence(p, t_recurrence(q, x, ctx), ctx);
    const Real rhs = t_analytic(BigInt(static_cast<unsigned long>(p * q)), x, ctx);
    CHECK(agreement_digits(lhs, rhs) >= 80 - 4 - 5);
  }
}

TEST_CASE("degenerate values are detected") {
  const PrecisionCtx ctx(40);
  CHECK(is_degenerate(dec("1", 40), ctx));
  CHECK(is_degenerate(dec("1e-25", 40), ctx));
  CHECK(is_degenerate(dec("-0.999999999999999999999999", 40), ctx));
  CHECK_FALSE(is_degenerate(dec("0.5", 40), ctx));
  // T_2(0) = -1 is hit on the way.
  CHECK_THROWS_AS(compose_chain(ChainSpec({{2, 2}}), dec("0", 40), ctx), DegenerateValueError);
}

TEST_CASE("domain errors") {
  const PrecisionCtx ctx(30);
  CHECK_THROWS_AS(t_recurrence(5, dec("1.5", 30), ctx), DomainError);
  CHECK_THROWS_AS(t_analytic(BigInt(5), dec("1", 30), ctx), DomainError);
  CHECK(estimated_digit_loss(BigInt(1000)) == 5);
}
