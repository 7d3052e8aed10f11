#include <doctest.h>

#include <cmath>

#include "qrke/chebyshev.hpp"
#include "qrke/error.hpp"
#include "qrke/protocol.hpp"

using namespace qrke;
using namespace qrke::protocol;

namespace {

SessionConfig test_config() {
  return SessionConfig::for_suite(resolve_suite("4-2", 128, std::nullopt));
}

std::array<std::uint8_t, 32> hash_of(const std::string& text) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

TEST_CASE("key derivation hashes the digit window") {
  const std::string window = "31415926535897932384626433832795028841971693993751";
  const Real shared = from_decimal("-0.1234567890" + window + "999", PrecisionCtx(70));
  const KeyMaterial km = derive_key(shared, 128);
  CHECK(km.digit_window == window);
  const auto key_hash = hash_of("QRKE-KEY" + window);
  CHECK(km.key == std::vector<std::uint8_t>(key_hash.begin(), key_hash.begin() + 16));
  const auto confirm_hash = hash_of("QRKE-CONFIRM" + window);
  CHECK(std::equal(km.confirm_tag.begin(), km.confirm_tag.end(), confirm_hash.begin()));
  CHECK(km.fingerprint() == to_hex(std::span(confirm_hash).first(8)));
  CHECK(derive_key(-shared, 128).key == km.key);

  CHECK_THROWS_AS(derive_key(from_decimal("0.5", PrecisionCtx(40)), 128), PrecisionError);
  CHECK_THROWS_AS(derive_key(from_decimal("0.5", PrecisionCtx(90)), 256), PrecisionError);
  CHECK(derive_key(from_decimal("0.5", PrecisionCtx(100)), 256).key.size() == 32);
}

TEST_CASE("public x lies in the allowed band and round-trips") {
  SeededRng rng(21);
  const PrecisionCtx ctx(65);
  for (int i = 0; i < 200; ++i) {
    const Real x = pick_public_x(ctx, rng);
    const double v = std::abs(x.to_double());
    CHECK(v >= kMinPublicX);
    CHECK(v <= kMaxPublicX);
    CHECK(wire_value(x, ctx) == x);
  }
}

TEST_CASE("handshake on the test suite yields equal keys") {
  SeededRng rng(22);
  const auto cfg = test_config();
  for (int i = 0; i < 10; ++i) {
    auto [init, offer] = create_offer(cfg, rng);
    CHECK(std::string(state_name(init.state())) == "OfferSent");
    CHECK(offer.suite_id == cfg.suite.id());
    CHECK(offer.nonce.size() == 32);
    auto [resp, reply] = respond(cfg, offer, rng);
    CHECK(std::string(state_name(resp.state())) == "Responded");
    FinalizeOutcome outcome = finalize(init, reply, rng);
    while (auto* resume = std::get_if<ResumeDecision>(&outcome)) {
      auto [next, next_reply] = respond(cfg, resume->offer, rng, &resp);
      resp = std::move(next);
      outcome = finalize(init, next_reply, rng);
    }
    REQUIRE(std::holds_alternative<KeyMaterial>(outcome));
    CHECK(std::string(state_name(init.state())) == "Confirmed");
    CHECK(resp.on_confirm(init.confirm_message()));
    CHECK(resp.key()->key == std::get<KeyMaterial>(outcome).key);
    // Oracle: both sides hold T_{r*s}(x).
    const BigInt rs = init.secret_exponent() * resp.secret_exponent();
    const Real direct = chebyshev::t_analytic(rs, init.x(), cfg.ctx());
    CHECK(agreement_digits(direct, *init.shared_value()) >= 60 - 5);
  }
}

TEST_CASE("respond refuses bad offers") {
  SeededRng rng(23);
  const auto cfg = test_config();
  auto [init, offer] = create_offer(cfg, rng);
  auto expect_reason = [&](OfferMsg msg, RejectReason reason) {
    try {
      (void)respond(cfg, msg, rng);
      FAIL("accepted");
    } catch (const RejectError& e) {
      CHECK(e.reason() == reason);
    }
  };
  auto bad = offer;
  bad.suite_id = std::string(32, '0');
  expect_reason(bad, RejectReason::unknown_suite);
  bad = offer;
  bad.x = from_decimal("0.995", cfg.ctx());
  expect_reason(bad, RejectReason::bad_x);
  bad = offer;
  bad.x = from_decimal("0.001", cfg.ctx());
  expect_reason(bad, RejectReason::bad_x);
  bad = offer;
  bad.y = from_decimal("1", cfg.ctx());
  expect_reason(bad, RejectReason::bad_y);
  bad = offer;
  bad.nonce = "abc";
  expect_reason(bad, RejectReason::bad_nonce);
  bad = offer;
  bad.attempt = 1;
  bad.prev_nonce = offer.nonce;
  expect_reason(bad, RejectReason::bad_resume);
  CHECK(std::string(reason_name(RejectReason::unknown_suite)) == "unknown-suite");
}

TEST_CASE("state machine rejects out-of-order use") {
  SeededRng rng(24);
  const auto cfg = test_config();
  auto [init, offer] = create_offer(cfg, rng);
  auto [resp, reply] = respond(cfg, offer, rng);
  CHECK_THROWS_AS(init.on_confirm(ConfirmMsg{offer.nonce, {}}), RejectError);
  CHECK_THROWS_AS((void)finalize(resp, reply, rng), RejectError);
  auto outcome = finalize(init, reply, rng);
  CHECK_THROWS_AS((void)finalize(init, reply, rng), RejectError);
  if (std::holds_alternative<KeyMaterial>(outcome)) {
    ConfirmMsg wrong = init.confirm_message();
    wrong.tag[0] ^= 1;
    CHECK_FALSE(resp.on_confirm(wrong));
    CHECK(resp.state() == SessionState::failed);
  }
}

TEST_CASE("resume chain is checked") {
  SeededRng rng(25);
  auto cfg = test_config();
  auto [init, offer] = create_offer(cfg, rng);
  auto [resp, reply] = respond(cfg, offer, rng);
  // Break the tag so the initiator resumes.
  reply.tag[0] ^= 0xff;
  auto outcome = finalize(init, reply, rng);
  REQUIRE(std::holds_alternative<ResumeDecision>(outcome));
  const auto& next = std::get<ResumeDecision>(outcome).offer;
  CHECK(next.attempt == 1);
  CHECK(next.prev_nonce == offer.nonce);
  CHECK(next.nonce != offer.nonce);
  CHECK(init.resume_count() == 1);

  auto wrong_chain = next;
  wrong_chain.prev_nonce = std::string(32, 'a');
  CHECK_THROWS_AS(respond(cfg, wrong_chain, rng, &resp), RejectError);
  auto [resp2, reply2] = respond(cfg, next, rng, &resp);
  CHECK(resp.state() == SessionState::failed);
  auto final_outcome = finalize(init, reply2, rng);
  CHECK(std::holds_alternative<KeyMaterial>(final_outcome));
}

TEST_CASE("resumes run out into a clean failure") {
  SeededRng rng(26);
  auto cfg = test_config();
  cfg.max_resumes = 2;
  auto [init, offer] = create_offer(cfg, rng);
  auto [resp, reply] = respond(cfg, offer, rng);
  int rounds = 0;
  for (;;) {
    reply.tag[0] ^= 0xff;
    auto outcome = finalize(init, reply, rng);
    if (auto* failed = std::get_if<FailedOutcome>(&outcome)) {
      CHECK(failed->diagnostic.find("agreeing digits") != std::string::npos);
      break;
    }
    REQUIRE(std::holds_alternative<ResumeDecision>(outcome));
    auto [next, next_reply] = respond(cfg, std::get<ResumeDecision>(outcome).offer, rng, &resp);
    resp = std::move(next);
    reply = std::move(next_reply);
    ++rounds;
  }
  CHECK(rounds == 2);
  CHECK(init.state() == SessionState::failed);
}

TEST_CASE("configuration validation") {
  auto cfg = test_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.suite.digits = 40;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.allow_undersized = true;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("tuned digits follow the normal approximation") {
  const auto fs = strategy::FunctionSet::first_primes_uniform(64, 4);
  const int at2 = tuned_digits(fs, 128, 0.02);
  const int at30 = tuned_digits(fs, 128, 0.30);
  CHECK(at2 > at30);
  // z(0.98) = 2.0537; mean 2m, deviation sqrt(2) s; plus 60 + 2.
  const double expect = std::ceil(2 * strategy::expected_log10_mean(fs) +
                                  2.0537489 * std::sqrt(2.0) * strategy::expected_log10_stddev(fs)) +
                        62;
  CHECK(std::abs(at2 - expect) <= 1);
  CHECK(at2 < strategy::required_precision(fs, 128));
  CHECK_THROWS_AS(tuned_digits(fs, 128, 0.7), ParameterError);
}
