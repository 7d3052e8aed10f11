#include "qrke/wire.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <vector>

namespace qrke::wire {

using protocol::ConfirmMsg;
using protocol::OfferMsg;
using protocol::RejectMsg;
using protocol::RespondMsg;
using protocol::Tag;

const char* type_name(MsgType type) {
  switch (type) {
    case MsgType::offer:
      return "OFFER";
    case MsgType::respond:
      return "RESPOND";
    case MsgType::confirm:
      return "CONFIRM";
    case MsgType::resume:
      return "RESUME";
    case MsgType::reject:
      return "REJECT";
  }
  return "?";
}

const char* code_name(DecodeCode code) {
  switch (code) {
    case DecodeCode::oversize:
      return "oversize";
    case DecodeCode::bad_version:
      return "bad-version";
    case DecodeCode::bad_number:
      return "bad-number";
    case DecodeCode::unknown_type:
      return "unknown-type";
    case DecodeCode::duplicate_key:
      return "duplicate-key";
    case DecodeCode::missing_key:
      return "missing-key";
    case DecodeCode::unknown_key:
      return "unknown-key";
    case DecodeCode::malformed:
      return "malformed";
    case DecodeCode::truncated:
      return "truncated";
  }
  return "?";
}

MsgType type_of(const Message& msg) {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OfferMsg>) {
          return MsgType::offer;
        } else if constexpr (std::is_same_v<T, ResumeMsg>) {
          return MsgType::resume;
        } else if constexpr (std::is_same_v<T, RespondMsg>) {
          return MsgType::respond;
        } else if constexpr (std::is_same_v<T, ConfirmMsg>) {
          return MsgType::confirm;
        } else {
          return MsgType::reject;
        }
      },
      msg);
}

namespace {

bool is_hex_id(std::string_view s) {
  return s.size() == 32 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

bool is_reason(std::string_view s) {
  return !s.empty() && s.size() <= 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
         });
}

std::string tag_hex(const Tag& tag) { return to_hex(tag); }

using Fields = std::vector<std::pair<std::string, std::string>>;

void require(bool ok, const char* what) {
  if (!ok) {
    throw ParameterError(std::string("encode: ") + what);
  }
}

void offer_fields(const OfferMsg& m, Fields& f) {
  require(is_hex_id(m.nonce), "nonce must be 32 hex digits");
  require(is_hex_id(m.suite_id), "suite id must be 32 hex digits");
  f.emplace_back("nonce", m.nonce);
  f.emplace_back("suite", m.suite_id);
  f.emplace_back("x", to_decimal(m.x));
  f.emplace_back("y", to_decimal(m.y));
}

Fields fields_of(const Message& msg) {
  Fields f;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OfferMsg>) {
          require(m.attempt == 0 && m.prev_nonce.empty(),
                  "a resumed offer must be sent as RESUME");
          offer_fields(m, f);
        } else if constexpr (std::is_same_v<T, ResumeMsg>) {
          require(m.offer.attempt >= 1 && m.offer.attempt <= kMaxAttempt,
                  "RESUME attempt out of range");
          require(is_hex_id(m.offer.prev_nonce), "prev-nonce must be 32 hex digits");
          offer_fields(m.offer, f);
          f.emplace_back("attempt", std::to_string(m.offer.attempt));
          f.emplace_back("prev-nonce", m.offer.prev_nonce);
        } else if constexpr (std::is_same_v<T, RespondMsg>) {
          require(is_hex_id(m.nonce), "nonce must be 32 hex digits");
          f.emplace_back("nonce", m.nonce);
          f.emplace_back("tag", tag_hex(m.tag));
          f.emplace_back("y", to_decimal(m.y));
        } else if constexpr (std::is_same_v<T, ConfirmMsg>) {
          require(is_hex_id(m.nonce), "nonce must be 32 hex digits");
          f.emplace_back("nonce", m.nonce);
          f.emplace_back("tag", tag_hex(m.tag));
        } else {
          require(is_hex_id(m.nonce), "nonce must be 32 hex digits");
          require(is_reason(m.reason), "reason must match [a-z0-9-]{1,64}");
          f.emplace_back("nonce", m.nonce);
          f.emplace_back("reason", m.reason);
        }
      },
      msg);
  std::sort(f.begin(), f.end());
  return f;
}

const std::map<std::string_view, MsgType>& type_table() {
  static const std::map<std::string_view, MsgType> table{
      {"OFFER", MsgType::offer},   {"RESPOND", MsgType::respond}, {"CONFIRM", MsgType::confirm},
      {"RESUME", MsgType::resume}, {"REJECT", MsgType::reject},
  };
  return table;
}

std::set<std::string_view> keys_for(MsgType type) {
  switch (type) {
    case MsgType::offer:
      return {"nonce", "suite", "x", "y"};
    case MsgType::resume:
      return {"attempt", "nonce", "prev-nonce", "suite", "x", "y"};
    case MsgType::respond:
      return {"nonce", "tag", "y"};
    case MsgType::confirm:
      return {"nonce", "tag"};
    case MsgType::reject:
      return {"nonce", "reason"};
  }
  return {};
}

[[noreturn]] void fail(DecodeCode code, const std::string& detail) {
  throw DecodeError(code, detail);
}

bool valid_key(std::string_view key) {
  return !key.empty() && key.size() <= 32 && std::all_of(key.begin(), key.end(), [](char c) {
           return (c >= 'a' && c <= 'z') || c == '-';
         });
}

bool valid_value(std::string_view value) {
  return !value.empty() && std::all_of(value.begin(), value.end(), [](char c) {
           return c > ' ' && c < 0x7f;
         });
}

Real parse_real(std::string_view text, const char* key) {
  if (!is_canonical_decimal(text)) {
    fail(DecodeCode::bad_number, std::string(key) + " is not a canonical decimal");
  }
  std::size_t digits = 0;
  for (char c : text) {
    if (c == 'e') {
      break;
    }
    digits += (c >= '0' && c <= '9') ? 1 : 0;
  }
  const int precision = std::max<int>(kMinDigits, static_cast<int>(digits));
  try {
    return from_decimal(text, PrecisionCtx(precision));
  } catch (const Error&) {
    fail(DecodeCode::bad_number, std::string(key) + " out of range");
  }
}

std::string parse_hex_id(std::string_view text, const char* key) {
  if (!is_hex_id(text)) {
    fail(DecodeCode::malformed, std::string(key) + " must be 32 lowercase hex digits");
  }
  return std::string(text);
}

Tag parse_tag(std::string_view text) {
  parse_hex_id(text, "tag");
  Tag tag{};
  for (std::size_t i = 0; i < tag.size(); ++i) {
    std::from_chars(text.data() + 2 * i, text.data() + 2 * i + 2, tag[i], 16);
  }
  return tag;
}

unsigned parse_attempt(std::string_view text) {
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text[0] == '0' || value < 1 ||
      value > kMaxAttempt) {
    fail(DecodeCode::bad_number, "attempt must be an integer in [1, 1000]");
  }
  return value;
}

}  // namespace

std::string encode(const Message& msg) {
  std::string out(kVersion);
  out.push_back(' ');
  out.append(type_name(type_of(msg)));
  out.push_back('\n');
  for (const auto& [key, value] : fields_of(msg)) {
    out.append(key);
    out.append(": ");
    out.append(value);
    out.push_back('\n');
  }
  out.push_back('\n');
  return out;
}

Message decode(std::string_view octets) {
  if (octets.size() > kMaxEnvelopeBytes) {
    fail(DecodeCode::oversize, "envelope exceeds 1 MiB");
  }
  const std::size_t header_end = octets.find('\n');
  if (header_end == std::string_view::npos) {
    fail(DecodeCode::truncated, "no header line");
  }
  const std::string_view header = octets.substr(0, header_end);
  const std::size_t space = header.find(' ');
  if (space == std::string_view::npos || header.substr(0, space) != kVersion) {
    fail(DecodeCode::bad_version, "expected 'QRKE/1 <TYPE>'");
  }
  const auto type_it = type_table().find(header.substr(space + 1));
  if (type_it == type_table().end()) {
    fail(DecodeCode::unknown_type, "unknown message type");
  }
  const MsgType type = type_it->second;

  std::map<std::string_view, std::string_view> fields;
  std::string_view previous_key;
  std::size_t pos = header_end + 1;
  bool terminated = false;
  while (pos < octets.size()) {
    const std::size_t end = octets.find('\n', pos);
    if (end == std::string_view::npos) {
      fail(DecodeCode::truncated, "unterminated line");
    }
    const std::string_view line = octets.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) {
      terminated = true;
      break;
    }
    const std::size_t sep = line.find(": ");
    if (sep == std::string_view::npos) {
      fail(DecodeCode::malformed, "line is not 'key: value'");
    }
    const std::string_view key = line.substr(0, sep);
    const std::string_view value = line.substr(sep + 2);
    if (!valid_key(key) || !valid_value(value)) {
      fail(DecodeCode::malformed, "bad key or value characters");
    }
    if (fields.count(key) != 0) {
      fail(DecodeCode::duplicate_key, std::string(key));
    }
    if (!previous_key.empty() && key < previous_key) {
      fail(DecodeCode::malformed, "keys are not sorted");
    }
    previous_key = key;
    fields.emplace(key, value);
  }
  if (!terminated) {
    fail(DecodeCode::truncated, "missing blank-line terminator");
  }
  if (pos != octets.size()) {
    fail(DecodeCode::malformed, "trailing bytes after the envelope");
  }

  const auto allowed = keys_for(type);
  for (const auto& [key, value] : fields) {
    if (allowed.count(key) == 0) {
      fail(DecodeCode::unknown_key, std::string(key));
    }
  }
  for (const auto key : allowed) {
    if (fields.count(key) == 0) {
      fail(DecodeCode::missing_key, std::string(key));
    }
  }

  switch (type) {
    case MsgType::offer:
    case MsgType::resume: {
      OfferMsg m{parse_hex_id(fields.at("suite"), "suite"), parse_real(fields.at("x"), "x"),
                 parse_real(fields.at("y"), "y"), parse_hex_id(fields.at("nonce"), "nonce"),
                 0, {}};
      if (type == MsgType::offer) {
        return m;
      }
      m.attempt = parse_attempt(fields.at("attempt"));
      m.prev_nonce = parse_hex_id(fields.at("prev-nonce"), "prev-nonce");
      return ResumeMsg{std::move(m)};
    }
    case MsgType::respond:
      return RespondMsg{parse_hex_id(fields.at("nonce"), "nonce"), parse_real(fields.at("y"), "y"),
                        parse_tag(fields.at("tag"))};
    case MsgType::confirm:
      return ConfirmMsg{parse_hex_id(fields.at("nonce"), "nonce"), parse_tag(fields.at("tag"))};
    case MsgType::reject: {
      const auto reason = fields.at("reason");
      if (!is_reason(reason)) {
        fail(DecodeCode::malformed, "reason must match [a-z0-9-]{1,64}");
      }
      return RejectMsg{parse_hex_id(fields.at("nonce"), "nonce"), std::string(reason)};
    }
  }
  fail(DecodeCode::unknown_type, "unreachable");
}

}  // namespace qrke::wire
