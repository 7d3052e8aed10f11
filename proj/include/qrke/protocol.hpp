#pragma once

// Two-party handshake over Chebyshev compositions.
//
//   initiator                                   responder
//   create_offer: pick x, draw r, y = T_r(x)
//                 ---- OFFER {suite, x, y, nonce, attempt} ---->
//                                               respond: draw s, y2 = T_s(x),
//                                               shared = T_s(y), derive key
//                 <---- RESPOND {nonce, y2, tag} --------------
//   finalize: shared = T_r(y2), derive key,
//             compare confirmation tags
//     match    ---- CONFIRM {nonce, tag} ---->  on_confirm
//     mismatch ---- RESUME {new offer, prev-nonce} (up to max_resumes)
//     give up  ---- REJECT {nonce, reason} ---->
//
// Keys come from |shared|: skip 10 significant digits, hash the next 50
// (128-bit) or 90 (256-bit) as ASCII under domain tag "QRKE-KEY"; the
// confirmation tag hashes the same window under "QRKE-CONFIRM".

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qrke/error.hpp"
#include "qrke/realfield.hpp"
#include "qrke/rng.hpp"
#include "qrke/strategy.hpp"
#include "qrke/suite.hpp"

namespace qrke::protocol {

using Tag = std::array<std::uint8_t, 16>;

/// |x| is drawn from [kMinPublicX, kMaxPublicX].
inline constexpr double kMinPublicX = 0.01;
inline constexpr double kMaxPublicX = 0.99;
inline constexpr int kMaxDegenerateRetries = 10;
/// Evaluation loss beyond log10(r*s) assumed by tuned_digits.
inline constexpr int kTunedLossDigits = 2;

struct SessionConfig {
  Suite suite;
  strategy::SecretConfig secret;
  unsigned max_resumes = 3;
  /// Skips the digits >= required_precision check. Fault injection only.
  bool allow_undersized = false;

  /// Throws ParameterError when the suite is under-sized (unless
  /// allow_undersized) or the secret strategy does not fit the suite.
  void validate() const;
  PrecisionCtx ctx() const { return suite.ctx(); }

  static SessionConfig for_suite(const NamedSuite& named);
};

struct OfferMsg {
  std::string suite_id;
  Real x;
  Real y;
  std::string nonce;
  unsigned attempt = 0;
  std::string prev_nonce;  // empty unless attempt > 0
};

struct RespondMsg {
  std::string nonce;
  Real y;
  Tag tag{};
};

struct ConfirmMsg {
  std::string nonce;
  Tag tag{};
};

struct RejectMsg {
  std::string nonce;
  std::string reason;
};

enum class RejectReason {
  unknown_suite,
  bad_x,
  bad_y,
  bad_nonce,
  bad_resume,
  out_of_order,
  degenerate,
  key_mismatch,
};

const char* reason_name(RejectReason reason);

/// A message was refused; `reason()` is what goes into a REJECT envelope.
class RejectError : public ProtocolError {
 public:
  RejectError(RejectReason reason, const std::string& what)
      : ProtocolError(what), reason_(reason) {}
  RejectReason reason() const noexcept { return reason_; }

 private:
  RejectReason reason_;
};

struct KeyMaterial {
  std::vector<std::uint8_t> key;
  Tag confirm_tag{};
  std::array<std::uint8_t, 8> fingerprint_bytes{};
  std::string digit_window;

  /// Hex of the first 8 octets of the confirmation hash.
  std::string fingerprint() const;
};

/// Throws PrecisionError when `shared` carries fewer than 10 + 50 (or
/// 10 + 90) digits, DomainError when |shared| > 1.
KeyMaterial derive_key(const Real& shared, unsigned security_bits);

/// Uniform over [-0.99, -0.01] U [0.01, 0.99], exactly representable with
/// ctx.digits decimal digits.
Real pick_public_x(const PrecisionCtx& ctx, CryptoRng& rng);

enum class Role { initiator, responder };
enum class SessionState { init, offer_sent, responded, confirmed, failed };

const char* state_name(SessionState state);

class Session {
 public:
  Role role() const noexcept { return role_; }
  SessionState state() const noexcept { return state_; }
  unsigned resume_count() const noexcept { return resume_count_; }
  const std::string& nonce() const noexcept { return nonce_; }
  const Real& x() const { return *x_; }
  const std::optional<Real>& peer_value() const noexcept { return peer_value_; }
  const std::optional<KeyMaterial>& key() const noexcept { return key_; }
  const SessionConfig& config() const noexcept { return cfg_; }

  /// Local shared value and secret exponent, for test oracles and
  /// diagnostics inside this process. Never serialized.
  const std::optional<Real>& shared_value() const noexcept { return shared_; }
  BigInt secret_exponent() const;

  /// The CONFIRM an initiator sends after a successful finalize.
  ConfirmMsg confirm_message() const;

  /// Responder side of CONFIRM. Returns true and enters Confirmed when the
  /// tag matches; otherwise enters Failed and returns false. Throws
  /// RejectError(out_of_order) outside the Responded state.
  bool on_confirm(const ConfirmMsg& msg);

  /// Peer gave up; enters Failed.
  void on_reject(const RejectMsg& msg);

 private:
  Session(Role role, SessionConfig cfg) : role_(role), cfg_(std::move(cfg)) {}

  friend std::pair<Session, OfferMsg> create_offer(const SessionConfig&, CryptoRng&);
  friend std::pair<Session, RespondMsg> respond(const SessionConfig&, const OfferMsg&, CryptoRng&,
                                                Session*);
  friend struct FinalizeAccess;

  OfferMsg start_attempt(CryptoRng& rng);

  Role role_;
  SessionConfig cfg_;
  SessionState state_ = SessionState::init;
  std::optional<strategy::SecretSelection> secret_;
  std::optional<Real> x_;
  std::optional<Real> own_value_;
  std::optional<Real> peer_value_;
  std::optional<Real> shared_;
  std::optional<KeyMaterial> key_;
  std::string nonce_;
  unsigned resume_count_ = 0;
};

/// Initiator: picks x and a secret, computes y = T_r(x). Throws ProtocolError
/// after kMaxDegenerateRetries degenerate draws.
std::pair<Session, OfferMsg> create_offer(const SessionConfig& cfg, CryptoRng& rng);

/// Responder. For a resumed attempt (offer.attempt > 0) `previous` must be the
/// session that answered the previous attempt; it is retired. Throws
/// RejectError for an unknown suite, out-of-range x or y, or a bad resume.
std::pair<Session, RespondMsg> respond(const SessionConfig& cfg, const OfferMsg& offer,
                                       CryptoRng& rng, Session* previous = nullptr);

struct ResumeDecision {
  OfferMsg offer;  // send as RESUME
};

struct FailedOutcome {
  std::string diagnostic;
};

using FinalizeOutcome = std::variant<KeyMaterial, ResumeDecision, FailedOutcome>;

/// Initiator. On tag mismatch with resumes left, draws a new x and secret
/// under the same suite and returns the next offer. Throws
/// RejectError(out_of_order) unless the session is an initiator in OfferSent.
FinalizeOutcome finalize(Session& session, const RespondMsg& msg, CryptoRng& rng);

/// Digit budget at which about `first_attempt_failure` of first attempts on
/// `fs` miss the key window, from a normal approximation of log10(r*s) plus
/// the evaluation loss. A reconstruction for fault injection; run it with
/// allow_undersized.
int tuned_digits(const strategy::FunctionSet& fs, unsigned security_bits,
                 double first_attempt_failure);

/// Quantizes v to its canonical ctx.digits-digit wire form.
Real wire_value(const Real& v, const PrecisionCtx& ctx);

}  // namespace qrke::protocol
