#include <doctest.h>

#include "qrke/error.hpp"
#include "qrke/protocol.hpp"
#include "qrke/wire.hpp"

using namespace qrke;
using namespace qrke::wire;

namespace {

const std::string kNonce = "0123456789abcdef0123456789abcdef";
const std::string kSuite = "c5708c8e52b48227ab3bf91ac6525f88";

protocol::OfferMsg sample_offer() {
  const PrecisionCtx ctx(20);
  return {kSuite, from_decimal("0.25", ctx), from_decimal("-0.5", ctx), kNonce, 0, {}};
}

DecodeCode code_of(const std::string& text) {
  try {
    (void)decode(text);
  } catch (const DecodeError& e) {
    return e.code();
  }
  FAIL("decoded: " << text);
  return DecodeCode::malformed;
}

}  // namespace

TEST_CASE("offer encoding is byte exact") {
  const std::string expected =
      "QRKE/1 OFFER\n"
      "nonce: 0123456789abcdef0123456789abcdef\n"
      "suite: c5708c8e52b48227ab3bf91ac6525f88\n"
      "x: 2.5000000000000000000e-1\n"
      "y: -5.0000000000000000000e-1\n"
      "\n";
  CHECK(encode(sample_offer()) == expected);
}

TEST_CASE("every message type round-trips") {
  auto offer = sample_offer();
  auto resumed = offer;
  resumed.attempt = 2;
  resumed.prev_nonce = std::string(32, 'f');
  protocol::Tag tag{};
  for (std::size_t i = 0; i < tag.size(); ++i) {
    tag[i] = static_cast<std::uint8_t>(i * 17);
  }
  const std::vector<Message> messages{
      offer,
      offer_message(resumed),
      protocol::RespondMsg{kNonce, from_decimal("0.125", PrecisionCtx(30)), tag},
      protocol::ConfirmMsg{kNonce, tag},
      protocol::RejectMsg{kNonce, "key-mismatch"},
  };
  for (const auto& msg : messages) {
    const std::string text = encode(msg);
    const Message back = decode(text);
    CHECK(type_of(back) == type_of(msg));
    CHECK(encode(back) == text);
  }
  CHECK(type_of(offer_message(resumed)) == MsgType::resume);
  const auto back = std::get<ResumeMsg>(decode(encode(offer_message(resumed))));
  CHECK(back.offer.attempt == 2);
  CHECK(back.offer.prev_nonce == resumed.prev_nonce);
  CHECK(back.offer.x == offer.x);
}

TEST_CASE("decoded numbers keep every transmitted digit") {
  const std::string y = "-1.2345678901234567890123456789012345678901234567890123456789e-3";
  const std::string text = "QRKE/1 RESPOND\nnonce: " + kNonce + "\ntag: " + std::string(32, '0') +
                           "\ny: " + y + "\n\n";
  const auto msg = std::get<protocol::RespondMsg>(decode(text));
  CHECK(to_decimal(msg.y) == y);
}

TEST_CASE("decode error codes") {
  const std::string good = encode(sample_offer());
  CHECK(code_of(std::string(kMaxEnvelopeBytes + 1, 'a')) == DecodeCode::oversize);
  CHECK(code_of("QRKE/2 OFFER\n\n") == DecodeCode::bad_version);
  CHECK(code_of("QRKE/1 HELLO\n\n") == DecodeCode::unknown_type);
  CHECK(code_of("QRKE/1 OFFER") == DecodeCode::truncated);
  CHECK(code_of(good.substr(0, good.size() - 1)) == DecodeCode::truncated);
  CHECK(code_of(good + "x") == DecodeCode::malformed);
  CHECK(code_of("QRKE/1 CONFIRM\nnonce: " + kNonce + "\nnonce: " + kNonce + "\n\n") ==
        DecodeCode::duplicate_key);
  CHECK(code_of("QRKE/1 CONFIRM\nnonce: " + kNonce + "\n\n") == DecodeCode::missing_key);
  CHECK(code_of("QRKE/1 CONFIRM\nextra: 1\nnonce: " + kNonce + "\ntag: " + kNonce + "\n\n") ==
        DecodeCode::unknown_key);
  CHECK(code_of("QRKE/1 CONFIRM\ntag: " + kNonce + "\nnonce: " + kNonce + "\n\n") ==
        DecodeCode::malformed);
  CHECK(code_of("QRKE/1 CONFIRM\nnonce: " + kNonce + "\ntag: " + std::string(32, 'G') + "\n\n") ==
        DecodeCode::malformed);
  CHECK(code_of("QRKE/1 REJECT\nnonce: " + kNonce + "\nreason: Bad\n\n") == DecodeCode::malformed);
  std::string bad_number = good;
  bad_number.replace(bad_number.find("x: ") + 3, 3, "0.25");
  CHECK(code_of(bad_number) == DecodeCode::bad_number);
  std::string resume = encode(offer_message([] {
    auto o = sample_offer();
    o.attempt = 1;
    o.prev_nonce = kNonce;
    return o;
  }()));
  resume.replace(resume.find("attempt: 1"), 10, "attempt: 1001");
  CHECK(code_of(resume) == DecodeCode::bad_number);
  CHECK(std::string(code_name(DecodeCode::missing_key)) == "missing-key");
}

TEST_CASE("encode refuses messages it could not decode again") {
  auto offer = sample_offer();
  offer.nonce = "short";
  CHECK_THROWS_AS(encode(offer), ParameterError);
  auto resumed = sample_offer();
  resumed.attempt = 1;
  CHECK_THROWS_AS(encode(resumed), ParameterError);
  CHECK_THROWS_AS(encode(protocol::RejectMsg{kNonce, "Not Allowed"}), ParameterError);
}

TEST_CASE("mutated envelopes never escape as anything but decode errors") {
  SeededRng rng(31);
  const std::string seed = encode(sample_offer());
  int crashes = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string text = seed;
    for (int e = 0; e < 4; ++e) {
      const std::size_t pos = rng.uniform(text.size() + 1);
      if (rng.uniform(2) == 0 && pos < text.size()) {
        text[pos] = static_cast<char>(rng.uniform(256));
      } else {
        text.insert(pos, 1, static_cast<char>(rng.uniform(128)));
      }
    }
    try {
      (void)decode(text);
    } catch (const DecodeError&) {
    } catch (...) {
      ++crashes;
    }
  }
  CHECK(crashes == 0);
}
