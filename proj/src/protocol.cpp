#include "qrke/protocol.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <span>

#include "qrke/chebyshev.hpp"

namespace qrke::protocol {

namespace {

constexpr char kKeyDomain[] = "QRKE-KEY";
constexpr char kConfirmDomain[] = "QRKE-CONFIRM";

std::array<std::uint8_t, 32> domain_hash(std::string_view domain, std::string_view window) {
  std::string input;
  input.reserve(domain.size() + window.size());
  input.append(domain);
  input.append(window);
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(input.data()), input.size()));
}

std::string fresh_nonce(CryptoRng& rng) {
  std::array<std::uint8_t, 16> bytes{};
  rng.fill(bytes);
  return to_hex(bytes);
}

bool tags_equal(const Tag& a, const Tag& b) {
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff |= static_cast<std::uint8_t>(a[i] ^ b[i]);
  }
  return diff == 0;
}

bool in_public_range(const Real& x) {
  const PrecisionCtx ctx(x.digits());
  const Real magnitude = x.abs();
  return magnitude >= from_decimal("0.01", ctx) && magnitude <= from_decimal("0.99", ctx);
}

bool strictly_inside_unit(const Real& v) { return mpfr_cmpabs_ui(v.raw(), 1) < 0; }

}  // namespace

const char* reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::unknown_suite:
      return "unknown-suite";
    case RejectReason::bad_x:
      return "bad-x";
    case RejectReason::bad_y:
      return "bad-y";
    case RejectReason::bad_nonce:
      return "bad-nonce";
    case RejectReason::bad_resume:
      return "bad-resume";
    case RejectReason::out_of_order:
      return "out-of-order";
    case RejectReason::degenerate:
      return "degenerate";
    case RejectReason::key_mismatch:
      return "key-mismatch";
  }
  return "unknown";
}

const char* state_name(SessionState state) {
  switch (state) {
    case SessionState::init:
      return "Init";
    case SessionState::offer_sent:
      return "OfferSent";
    case SessionState::responded:
      return "Responded";
    case SessionState::confirmed:
      return "Confirmed";
    case SessionState::failed:
      return "Failed";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Configuration

void SessionConfig::validate() const {
  const int required = strategy::required_precision(suite.functions, suite.security_bits);
  if (!allow_undersized) {
    if (suite.digits < required) {
      throw ParameterError("suite carries " + std::to_string(suite.digits) +
                           " digits, required precision is " + std::to_string(required));
    }
    strategy::check_fits(suite.functions, secret, suite.digits, suite.security_bits);
  }
}

SessionConfig SessionConfig::for_suite(const NamedSuite& named) {
  SessionConfig cfg{named.suite, {}, 3, false};
  cfg.secret.floor = named.floor;
  return cfg;
}

// ---------------------------------------------------------------------------
// Keys and public values

std::string KeyMaterial::fingerprint() const { return to_hex(fingerprint_bytes); }

KeyMaterial derive_key(const Real& shared, unsigned security_bits) {
  const int take = strategy::shared_digit_requirement(security_bits);
  const int needed = strategy::kSkippedLeadingDigits + take;
  if (shared.digits() < needed) {
    throw PrecisionError("shared value carries " + std::to_string(shared.digits()) +
                         " digits, key derivation needs " + std::to_string(needed));
  }
  if (mpfr_cmpabs_ui(shared.raw(), 1) > 0) {
    throw DomainError("shared value outside [-1, 1]");
  }
  const std::string digits = significant_digits(shared, needed);
  KeyMaterial km;
  km.digit_window = digits.substr(strategy::kSkippedLeadingDigits);
  const auto key_hash = domain_hash(kKeyDomain, km.digit_window);
  km.key.assign(key_hash.begin(), key_hash.begin() + security_bits / 8);
  const auto confirm_hash = domain_hash(kConfirmDomain, km.digit_window);
  std::copy_n(confirm_hash.begin(), km.confirm_tag.size(), km.confirm_tag.begin());
  std::copy_n(confirm_hash.begin(), km.fingerprint_bytes.size(), km.fingerprint_bytes.begin());
  return km;
}

Real pick_public_x(const PrecisionCtx& ctx, CryptoRng& rng) {
  // |x| = (10^D + 98 u) / 10^(D+2) with u uniform on [0, 10^D).
  const auto d = static_cast<unsigned long>(ctx.digits());
  const BigInt scale = pow10(d);
  const BigInt u = rng.uniform(scale);
  const BigInt numerator = scale + u * 98;
  const bool negative = (rng.next_u64() & 1u) != 0;
  const std::string text =
      (negative ? "-" : "") + numerator.get_str() + "e-" + std::to_string(d + 2);
  return from_decimal(text, ctx);
}

int tuned_digits(const strategy::FunctionSet& fs, unsigned security_bits,
                 double first_attempt_failure) {
  if (!(first_attempt_failure > 0.0 && first_attempt_failure < 0.5)) {
    throw ParameterError("tuned failure rate must lie in (0, 0.5)");
  }
  // log10(r*s) for two independent draws: mean 2m, deviation sqrt(2) s.
  const double mean = 2.0 * strategy::expected_log10_mean(fs);
  const double sd = std::sqrt(2.0) * strategy::expected_log10_stddev(fs);
  const double z =
      boost::math::quantile(boost::math::complement(boost::math::normal(), first_attempt_failure));
  const int window = strategy::kSkippedLeadingDigits + strategy::shared_digit_requirement(security_bits);
  return static_cast<int>(std::ceil(mean + z * sd)) + window + kTunedLossDigits;
}

Real wire_value(const Real& v, const PrecisionCtx& ctx) {
  return from_decimal(to_decimal(v.rounded(ctx)), ctx);
}

// ---------------------------------------------------------------------------
// Session

BigInt Session::secret_exponent() const {
  if (!secret_) {
    throw ProtocolError("session holds no secret yet");
  }
  return strategy::raw_exponent(*secret_);
}

ConfirmMsg Session::confirm_message() const {
  if (role_ != Role::initiator || state_ != SessionState::confirmed || !key_) {
    throw RejectError(RejectReason::out_of_order, "confirm_message: session not confirmed");
  }
  return ConfirmMsg{nonce_, key_->confirm_tag};
}

bool Session::on_confirm(const ConfirmMsg& msg) {
  if (role_ != Role::responder || state_ != SessionState::responded) {
    throw RejectError(RejectReason::out_of_order,
                      std::string("CONFIRM in state ") + state_name(state_));
  }
  if (msg.nonce != nonce_) {
    throw RejectError(RejectReason::bad_nonce, "CONFIRM for another session");
  }
  if (key_ && tags_equal(msg.tag, key_->confirm_tag)) {
    state_ = SessionState::confirmed;
    return true;
  }
  state_ = SessionState::failed;
  return false;
}

void Session::on_reject(const RejectMsg& msg) {
  if (msg.nonce != nonce_) {
    throw RejectError(RejectReason::bad_nonce, "REJECT for another session");
  }
  state_ = SessionState::failed;
}

OfferMsg Session::start_attempt(CryptoRng& rng) {
  const PrecisionCtx ctx = cfg_.ctx();
  for (int attempt = 0; attempt < kMaxDegenerateRetries; ++attempt) {
    Real x = pick_public_x(ctx, rng);
    auto secret = strategy::draw_secret(cfg_.suite.functions, cfg_.secret, rng);
    try {
      Real y = wire_value(strategy::evaluate_secret(secret, x, ctx), ctx);
      if (chebyshev::is_degenerate(y, ctx)) {
        continue;
      }
      secret_ = std::move(secret);
      x_ = x;
      own_value_ = y;
      peer_value_.reset();
      shared_.reset();
      key_.reset();
      nonce_ = fresh_nonce(rng);
      state_ = SessionState::offer_sent;
      return OfferMsg{cfg_.suite.id(), std::move(x), std::move(y), nonce_, resume_count_, {}};
    } catch (const DegenerateValueError&) {
      continue;
    }
  }
  state_ = SessionState::failed;
  throw ProtocolError("no non-degenerate public value after " +
                      std::to_string(kMaxDegenerateRetries) + " draws");
}

std::pair<Session, OfferMsg> create_offer(const SessionConfig& cfg, CryptoRng& rng) {
  cfg.validate();
  Session session(Role::initiator, cfg);
  OfferMsg offer = session.start_attempt(rng);
  return {std::move(session), std::move(offer)};
}

std::pair<Session, RespondMsg> respond(const SessionConfig& cfg, const OfferMsg& offer,
                                       CryptoRng& rng, Session* previous) {
  cfg.validate();
  if (offer.suite_id != cfg.suite.id()) {
    throw RejectError(RejectReason::unknown_suite, "offer names an unknown suite");
  }
  if (offer.nonce.size() != 32) {
    throw RejectError(RejectReason::bad_nonce, "offer nonce must be 16 octets of hex");
  }
  if (offer.attempt > 0) {
    const bool chained = previous != nullptr && previous->role() == Role::responder &&
                         previous->state() == SessionState::responded &&
                         previous->nonce() == offer.prev_nonce &&
                         offer.attempt == previous->resume_count() + 1 &&
                         offer.attempt <= cfg.max_resumes;
    if (!chained) {
      throw RejectError(RejectReason::bad_resume, "resume does not follow the previous attempt");
    }
  }
  const PrecisionCtx ctx = cfg.ctx();
  const Real x = offer.x.rounded(ctx);
  const Real y = offer.y.rounded(ctx);
  if (!in_public_range(x)) {
    throw RejectError(RejectReason::bad_x, "public x outside [0.01, 0.99] in magnitude");
  }
  if (!strictly_inside_unit(y) || chebyshev::is_degenerate(y, ctx)) {
    throw RejectError(RejectReason::bad_y, "offered value outside (-1, 1) or degenerate");
  }

  Session session(Role::responder, cfg);
  session.resume_count_ = offer.attempt;
  for (int attempt = 0; attempt < kMaxDegenerateRetries; ++attempt) {
    auto secret = strategy::draw_secret(cfg.suite.functions, cfg.secret, rng);
    try {
      Real y2 = wire_value(strategy::evaluate_secret(secret, x, ctx), ctx);
      if (chebyshev::is_degenerate(y2, ctx)) {
        continue;
      }
      Real shared = strategy::evaluate_secret(secret, y, ctx);
      KeyMaterial km = derive_key(shared, cfg.suite.security_bits);
      RespondMsg msg{offer.nonce, y2, km.confirm_tag};
      session.secret_ = std::move(secret);
      session.x_ = x;
      session.own_value_ = std::move(y2);
      session.peer_value_ = y;
      session.shared_ = std::move(shared);
      session.key_ = std::move(km);
      session.nonce_ = offer.nonce;
      session.state_ = SessionState::responded;
      if (previous != nullptr) {
        previous->state_ = SessionState::failed;
      }
      return {std::move(session), std::move(msg)};
    } catch (const DegenerateValueError&) {
      continue;
    }
  }
  throw RejectError(RejectReason::degenerate, "no non-degenerate response after " +
                                                  std::to_string(kMaxDegenerateRetries) +
                                                  " draws");
}

struct FinalizeAccess {
  static FinalizeOutcome run(Session& s, const RespondMsg& msg, CryptoRng& rng) {
    if (s.role_ != Role::initiator || s.state_ != SessionState::offer_sent) {
      throw RejectError(RejectReason::out_of_order,
                        std::string("RESPOND in state ") + state_name(s.state_));
    }
    if (msg.nonce != s.nonce_) {
      throw RejectError(RejectReason::bad_nonce, "RESPOND for another session");
    }
    const PrecisionCtx ctx = s.cfg_.ctx();
    const Real y2 = msg.y.rounded(ctx);
    if (!strictly_inside_unit(y2) || chebyshev::is_degenerate(y2, ctx)) {
      s.state_ = SessionState::failed;
      throw RejectError(RejectReason::bad_y, "responder value outside (-1, 1) or degenerate");
    }
    s.peer_value_ = y2;

    bool matched = false;
    try {
      Real shared = strategy::evaluate_secret(*s.secret_, y2, ctx);
      KeyMaterial km = derive_key(shared, s.cfg_.suite.security_bits);
      matched = tags_equal(km.confirm_tag, msg.tag);
      s.shared_ = std::move(shared);
      if (matched) {
        s.key_ = std::move(km);
        s.state_ = SessionState::confirmed;
        return *s.key_;
      }
    } catch (const DegenerateValueError&) {
      matched = false;
    }

    if (s.resume_count_ < s.cfg_.max_resumes) {
      const std::string previous_nonce = s.nonce_;
      ++s.resume_count_;
      OfferMsg offer = s.start_attempt(rng);
      offer.prev_nonce = previous_nonce;
      return ResumeDecision{std::move(offer)};
    }

    s.state_ = SessionState::failed;
    const int window = strategy::kSkippedLeadingDigits +
                       strategy::shared_digit_requirement(s.cfg_.suite.security_bits);
    const int loss = chebyshev::estimated_digit_loss(strategy::raw_exponent(*s.secret_));
    const int available = ctx.digits() - 2 * loss;
    return FailedOutcome{"key confirmation failed after " + std::to_string(s.resume_count_ + 1) +
                         " attempts: expected " + std::to_string(window) +
                         " agreeing digits, estimated available ~" + std::to_string(available) +
                         " (" + std::to_string(ctx.digits()) + " carried, ~" +
                         std::to_string(loss) + " lost per side)"};
  }
};

FinalizeOutcome finalize(Session& session, const RespondMsg& msg, CryptoRng& rng) {
  return FinalizeAccess::run(session, msg, rng);
}

}  // namespace qrke::protocol
