#pragma once

// Text envelopes for handshake messages.
//
//   QRKE/1 OFFER
//   nonce: 3f0c...            (32 hex digits)
//   suite: 9a1b...            (suite id, 32 hex digits)
//   x: 5.000...e-1            (canonical decimal, padded to the suite digits)
//   y: -3.141...e-1
//   <blank line>
//
// Keys are sorted. RESUME carries the OFFER keys plus `attempt` and
// `prev-nonce`; RESPOND has nonce, tag, y; CONFIRM nonce, tag; REJECT nonce,
// reason. The blank line ends the envelope on a byte stream.

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

#include "qrke/error.hpp"
#include "qrke/protocol.hpp"

namespace qrke::wire {

inline constexpr std::string_view kVersion = "QRKE/1";
inline constexpr std::size_t kMaxEnvelopeBytes = 1 << 20;
inline constexpr unsigned kMaxAttempt = 1000;

enum class MsgType { offer, respond, confirm, resume, reject };

const char* type_name(MsgType type);

struct ResumeMsg {
  protocol::OfferMsg offer;  // attempt > 0, prev_nonce set
};

using Message = std::variant<protocol::OfferMsg, ResumeMsg, protocol::RespondMsg,
                             protocol::ConfirmMsg, protocol::RejectMsg>;

MsgType type_of(const Message& msg);

/// OFFER for a first attempt, RESUME otherwise.
inline Message offer_message(protocol::OfferMsg offer) {
  if (offer.attempt > 0) {
    return ResumeMsg{std::move(offer)};
  }
  return offer;
}

enum class DecodeCode {
  oversize,
  bad_version,
  bad_number,
  unknown_type,
  duplicate_key,
  missing_key,
  unknown_key,
  malformed,
  truncated,
};

const char* code_name(DecodeCode code);

class DecodeError : public ProtocolError {
 public:
  DecodeError(DecodeCode code, const std::string& detail)
      : ProtocolError(std::string(code_name(code)) + ": " + detail), code_(code) {}
  DecodeCode code() const noexcept { return code_; }

 private:
  DecodeCode code_;
};

/// Deterministic encoding. Throws ParameterError for messages that could not
/// be decoded again (bad nonce/tag length, attempt out of range, ...).
std::string encode(const Message& msg);

/// Strict parse of exactly one envelope. Throws DecodeError.
Message decode(std::string_view octets);

}  // namespace qrke::wire
