#include "qrke/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace qrke::transport {

using protocol::ConfirmMsg;
using protocol::KeyMaterial;
using protocol::OfferMsg;
using protocol::RejectError;
using protocol::RejectMsg;
using protocol::RejectReason;
using protocol::RespondMsg;
using protocol::SessionConfig;

namespace {

std::string errno_text() { return std::strerror(errno); }

struct AddrInfoDeleter {
  void operator()(addrinfo* ai) const { freeaddrinfo(ai); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = passive ? AI_PASSIVE : 0;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints,
                             &result);
  if (rc != 0) {
    throw IoError("cannot resolve " + ep.host + ": " + gai_strerror(rc));
  }
  return AddrInfoPtr(result);
}

// Waits for `events` on fd; false on timeout.
bool wait_for(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno == EINTR) {
      continue;
    }
    if (rc < 0) {
      throw IoError("poll: " + errno_text());
    }
    return rc > 0;
  }
}

const std::string& nonce_of(const wire::Message& msg) {
  return std::visit(
      [](const auto& m) -> const std::string& {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, wire::ResumeMsg>) {
          return m.offer.nonce;
        } else {
          return m.nonce;
        }
      },
      msg);
}

RejectMsg reject_for(const std::string& nonce, RejectReason reason) {
  static const std::string kZeroNonce(32, '0');
  const bool usable = nonce.size() == 32 &&
                      nonce.find_first_not_of("0123456789abcdef") == std::string::npos;
  return RejectMsg{usable ? nonce : kZeroNonce, protocol::reason_name(reason)};
}

// Best effort: the peer may already be gone.
void try_send(Connection& conn, const wire::Message& msg) {
  try {
    conn.send(msg);
  } catch (const Error&) {
  }
}

[[noreturn]] void reject_and_throw(Connection& conn, const std::string& nonce,
                                   RejectReason reason, const std::string& what) {
  try_send(conn, reject_for(nonce, reason));
  throw ProtocolError(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Endpoints and sockets

Endpoint Endpoint::parse(std::string_view text) {
  std::string_view host;
  std::string_view port;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':') {
      throw ParameterError("endpoint must read [host]:port");
    }
    host = text.substr(1, close - 1);
    port = text.substr(close + 2);
  } else {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
      throw ParameterError("endpoint must read host:port");
    }
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  if (host.empty()) {
    throw ParameterError("endpoint '" + std::string(text) + "' has no host");
  }
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (port.empty() || ec != std::errc() || ptr != port.data() + port.size() || value > 65535) {
    throw ParameterError("bad port in endpoint '" + std::string(text) + "'");
  }
  return Endpoint{std::string(host), static_cast<std::uint16_t>(value)};
}

Connection::Connection(int fd, Options opts) : fd_(fd), opts_(opts) {}

Connection::Connection(Connection&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      opts_(other.opts_),
      buffer_(std::move(other.buffer_)),
      transcript_(other.transcript_) {}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) {
      ::close(fd_);
    }
    fd_ = std::exchange(other.fd_, -1);
    opts_ = other.opts_;
    buffer_ = std::move(other.buffer_);
    transcript_ = other.transcript_;
  }
  return *this;
}

Connection::~Connection() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

Connection Connection::connect(const Endpoint& endpoint, Options opts) {
  const auto addrs = resolve(endpoint, false);
  std::string last_error = "no addresses";
  for (addrinfo* ai = addrs.get(); ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text();
      continue;
    }
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      if (!wait_for(fd, POLLOUT, opts.timeout)) {
        ::close(fd);
        throw IoError("connect to " + endpoint.host + ":" + std::to_string(endpoint.port) +
                      " timed out");
      }
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      errno = err;
      rc = err == 0 ? 0 : -1;
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      return Connection(fd, opts);
    }
    last_error = errno_text();
    ::close(fd);
  }
  throw IoError("cannot connect to " + endpoint.host + ":" + std::to_string(endpoint.port) +
                ": " + last_error);
}

void Connection::write_all(std::string_view bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    if (!wait_for(fd_, POLLOUT, opts_.timeout)) {
      throw IoError("send timed out");
    }
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) {
        continue;
      }
      throw IoError("send: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

void Connection::send(const wire::Message& msg) {
  const std::string bytes = wire::encode(msg);
  write_all(bytes);
  if (transcript_ != nullptr) {
    transcript_->append(bytes);
  }
}

wire::Message Connection::receive() {
  for (;;) {
    const auto end = buffer_.find("\n\n");
    if (end != std::string::npos) {
      const std::string envelope = buffer_.substr(0, end + 2);
      buffer_.erase(0, end + 2);
      if (transcript_ != nullptr) {
        transcript_->append(envelope);
      }
      return wire::decode(envelope);
    }
    if (buffer_.size() > wire::kMaxEnvelopeBytes) {
      throw wire::DecodeError(wire::DecodeCode::oversize, "envelope exceeds 1 MiB");
    }
    if (!wait_for(fd_, POLLIN, opts_.timeout)) {
      throw IoError("timed out waiting for the peer");
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) {
        continue;
      }
      throw IoError("recv: " + errno_text());
    }
    if (n == 0) {
      throw IoError(buffer_.empty() ? "connection closed by peer"
                                    : "connection closed mid-envelope");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Listener::Listener(const Endpoint& endpoint, Options opts) : opts_(opts) {
  const auto addrs = resolve(endpoint, true);
  std::string last_error = "no addresses";
  for (addrinfo* ai = addrs.get(); ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text();
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      sockaddr_storage bound{};
      socklen_t len = sizeof(bound);
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
      port_ = ntohs(bound.ss_family == AF_INET6
                        ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                        : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
      fd_ = fd;
      return;
    }
    last_error = errno_text();
    ::close(fd);
  }
  throw IoError("cannot listen on " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " +
                last_error);
}

Listener::Listener(Listener&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), port_(other.port_), opts_(other.opts_) {}

Listener::~Listener() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

std::optional<Connection> Listener::accept(std::chrono::milliseconds wait) {
  if (!wait_for(fd_, POLLIN, wait)) {
    return std::nullopt;
  }
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) {
      return std::nullopt;
    }
    throw IoError("accept: " + errno_text());
  }
  return Connection(fd, opts_);
}

// ---------------------------------------------------------------------------
// Handshake drivers

KeyMaterial run_initiator(Connection& conn, const SessionConfig& cfg, CryptoRng& rng) {
  auto [session, offer] = protocol::create_offer(cfg, rng);
  conn.send(wire::offer_message(std::move(offer)));
  for (;;) {
    const wire::Message msg = conn.receive();
    if (const auto* reject = std::get_if<RejectMsg>(&msg)) {
      session.on_reject(*reject);
      throw ProtocolError("peer rejected the handshake: " + reject->reason);
    }
    const auto* respond = std::get_if<RespondMsg>(&msg);
    if (respond == nullptr) {
      reject_and_throw(conn, session.nonce(), RejectReason::out_of_order,
                       std::string("unexpected ") + wire::type_name(wire::type_of(msg)));
    }
    protocol::FinalizeOutcome outcome;
    try {
      outcome = protocol::finalize(session, *respond, rng);
    } catch (const RejectError& e) {
      reject_and_throw(conn, session.nonce(), e.reason(), e.what());
    }
    if (auto* key = std::get_if<KeyMaterial>(&outcome)) {
      conn.send(session.confirm_message());
      return std::move(*key);
    }
    if (auto* resume = std::get_if<protocol::ResumeDecision>(&outcome)) {
      conn.send(wire::ResumeMsg{std::move(resume->offer)});
      continue;
    }
    reject_and_throw(conn, session.nonce(), RejectReason::key_mismatch,
                     std::get<protocol::FailedOutcome>(outcome).diagnostic);
  }
}

KeyMaterial run_initiator(const std::string& endpoint, const SessionConfig& cfg, CryptoRng& rng,
                          Options opts) {
  Connection conn = Connection::connect(Endpoint::parse(endpoint), opts);
  return run_initiator(conn, cfg, rng);
}

KeyMaterial run_responder(Connection& conn, const SessionConfig& cfg, CryptoRng& rng) {
  wire::Message msg = conn.receive();
  const auto* offer = std::get_if<OfferMsg>(&msg);
  if (offer == nullptr) {
    reject_and_throw(conn, nonce_of(msg), RejectReason::out_of_order,
                     std::string("expected OFFER, got ") + wire::type_name(wire::type_of(msg)));
  }
  std::optional<protocol::Session> session;
  try {
    auto [s, respond] = protocol::respond(cfg, *offer, rng);
    session.emplace(std::move(s));
    conn.send(respond);
  } catch (const RejectError& e) {
    reject_and_throw(conn, offer->nonce, e.reason(), e.what());
  }
  for (;;) {
    msg = conn.receive();
    if (const auto* confirm = std::get_if<ConfirmMsg>(&msg)) {
      bool ok = false;
      try {
        ok = session->on_confirm(*confirm);
      } catch (const RejectError& e) {
        reject_and_throw(conn, session->nonce(), e.reason(), e.what());
      }
      if (!ok) {
        reject_and_throw(conn, session->nonce(), RejectReason::key_mismatch,
                         "confirmation tag does not match");
      }
      return *session->key();
    }
    if (const auto* resume = std::get_if<wire::ResumeMsg>(&msg)) {
      try {
        auto [s, respond] = protocol::respond(cfg, resume->offer, rng, &*session);
        session.emplace(std::move(s));
        conn.send(respond);
      } catch (const RejectError& e) {
        reject_and_throw(conn, resume->offer.nonce, e.reason(), e.what());
      }
      continue;
    }
    if (const auto* reject = std::get_if<RejectMsg>(&msg)) {
      session->on_reject(*reject);
      throw ProtocolError("peer abandoned the handshake: " + reject->reason);
    }
    reject_and_throw(conn, session->nonce(), RejectReason::out_of_order,
                     std::string("unexpected ") + wire::type_name(wire::type_of(msg)));
  }
}

KeyMaterial run_responder(const std::string& listen_endpoint, const SessionConfig& cfg,
                          CryptoRng& rng, Options opts) {
  Listener listener(Endpoint::parse(listen_endpoint), opts);
  auto conn = listener.accept(opts.timeout);
  if (!conn) {
    throw IoError("no initiator connected before the timeout");
  }
  return run_responder(*conn, cfg, rng);
}

void serve(Listener& listener, const SessionConfig& cfg, CryptoRng& rng,
           std::size_t max_sessions, const std::function<void(const ServeOutcome&)>& on_done,
           const std::atomic<bool>* stop) {
  std::vector<std::thread> workers;
  std::mutex report_mutex;
  std::size_t accepted = 0;
  while ((max_sessions == 0 || accepted < max_sessions) &&
         (stop == nullptr || !stop->load())) {
    auto conn = listener.accept(std::chrono::milliseconds(200));
    if (!conn) {
      continue;
    }
    ++accepted;
    workers.emplace_back([&, c = std::move(*conn)]() mutable {
      ServeOutcome outcome;
      try {
        outcome.fingerprint = run_responder(c, cfg, rng).fingerprint();
        outcome.ok = true;
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
      std::lock_guard lock(report_mutex);
      on_done(outcome);
    });
  }
  for (auto& w : workers) {
    w.join();
  }
}

// ---------------------------------------------------------------------------
// Offline file exchange

namespace {

constexpr std::string_view kStateMagic = "QRKE-STATE/1";

struct State {
  std::string role;
  std::array<std::uint8_t, 32> seed{};
  std::string suite_id;
  std::vector<wire::Message> received;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (buf.str().size() > 64 * wire::kMaxEnvelopeBytes) {
    throw IoError(path.string() + " is too large");
  }
  return buf.str();
}

// Writes via a temporary file created with mode 0600, then renames.
void write_private(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  if (fd < 0) {
    throw IoError("cannot create " + tmp.string() + ": " + errno_text());
  }
  ::fchmod(fd, 0600);
  std::size_t written = 0;
  while (written < content.size()) {
    const ssize_t n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0 && errno == EINTR) {
      continue;
    }
    if (n < 0) {
      ::close(fd);
      throw IoError("cannot write " + tmp.string() + ": " + errno_text());
    }
    written += static_cast<std::size_t>(n);
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot replace " + path.string() + ": " + ec.message());
  }
}

void save_state(const std::filesystem::path& path, const State& state) {
  std::string out(kStateMagic);
  out += " " + state.role + "\nseed " + to_hex(state.seed) + "\nsuite " + state.suite_id + "\n\n";
  for (const auto& msg : state.received) {
    out += wire::encode(msg);
  }
  write_private(path, out);
}

State load_state(const std::filesystem::path& path, std::string_view role,
                 const SessionConfig& cfg) {
  const std::string text = read_file(path);
  const auto corrupt = [&](const char* why) {
    return IoError("state file " + path.string() + " is corrupt: " + why);
  };
  const auto header_end = text.find("\n\n");
  if (header_end == std::string::npos) {
    throw corrupt("no header");
  }
  std::istringstream header(text.substr(0, header_end));
  std::string magic, state_role, seed_key, seed_hex, suite_key, suite_id;
  header >> magic >> state_role >> seed_key >> seed_hex >> suite_key >> suite_id;
  if (magic != kStateMagic || seed_key != "seed" || suite_key != "suite" ||
      seed_hex.size() != 64) {
    throw corrupt("bad header");
  }
  if (state_role != role) {
    throw ProtocolError("state file belongs to the " + state_role + ", not the " +
                        std::string(role));
  }
  if (suite_id != cfg.suite.id()) {
    throw ProtocolError("state file was created for another suite");
  }
  State state{state_role, {}, suite_id, {}};
  for (std::size_t i = 0; i < 32; ++i) {
    const auto [ptr, ec] =
        std::from_chars(seed_hex.data() + 2 * i, seed_hex.data() + 2 * i + 2, state.seed[i], 16);
    if (ec != std::errc() || ptr != seed_hex.data() + 2 * i + 2) {
      throw corrupt("bad seed");
    }
  }
  std::size_t pos = header_end + 2;
  while (pos < text.size()) {
    const auto end = text.find("\n\n", pos);
    if (end == std::string::npos) {
      throw corrupt("truncated envelope");
    }
    state.received.push_back(wire::decode(std::string_view(text).substr(pos, end + 2 - pos)));
    pos = end + 2;
  }
  return state;
}

State fresh_state(std::string role, const SessionConfig& cfg, CryptoRng& entropy) {
  State state{std::move(role), {}, cfg.suite.id(), {}};
  entropy.fill(state.seed);
  return state;
}

const OfferMsg& offer_of(const wire::Message& msg) {
  if (const auto* o = std::get_if<OfferMsg>(&msg)) {
    return *o;
  }
  return std::get<wire::ResumeMsg>(msg).offer;
}

}  // namespace

void write_envelope(const std::filesystem::path& path, const wire::Message& msg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << wire::encode(msg);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
}

wire::Message read_envelope(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (text.size() > wire::kMaxEnvelopeBytes) {
    throw wire::DecodeError(wire::DecodeCode::oversize, path.string());
  }
  return wire::decode(text);
}

OfflineStep offline_offer(const SessionConfig& cfg, const std::filesystem::path& state_path,
                          CryptoRng& entropy) {
  if (std::filesystem::exists(state_path)) {
    throw IoError("state file " + state_path.string() + " already exists");
  }
  State state = fresh_state("initiator", cfg, entropy);
  SeededRng rng(state.seed);
  auto [session, offer] = protocol::create_offer(cfg, rng);
  save_state(state_path, state);
  return OfflineStep{wire::offer_message(std::move(offer)), std::nullopt, "offer"};
}

OfflineStep offline_respond(const SessionConfig& cfg, const wire::Message& incoming,
                            const std::filesystem::path& state_path, CryptoRng& entropy) {
  const bool is_offer = std::holds_alternative<OfferMsg>(incoming);
  if (!is_offer && !std::holds_alternative<wire::ResumeMsg>(incoming)) {
    return OfflineStep{reject_for(nonce_of(incoming), RejectReason::out_of_order), std::nullopt,
                       "failed: expected OFFER or RESUME"};
  }
  State state;
  if (is_offer) {
    if (std::filesystem::exists(state_path)) {
      throw IoError("state file " + state_path.string() + " already exists");
    }
    state = fresh_state("responder", cfg, entropy);
  } else {
    state = load_state(state_path, "responder", cfg);
  }

  SeededRng rng(state.seed);
  std::optional<protocol::Session> previous;
  for (const auto& msg : state.received) {
    if (std::holds_alternative<OfferMsg>(msg) == (previous.has_value())) {
      throw IoError("state file " + state_path.string() + " holds an out-of-order envelope");
    }
    auto [s, unused] = protocol::respond(cfg, offer_of(msg), rng, previous ? &*previous : nullptr);
    previous.emplace(std::move(s));
  }
  try {
    auto [session, respond] =
        protocol::respond(cfg, offer_of(incoming), rng, previous ? &*previous : nullptr);
    state.received.push_back(incoming);
    save_state(state_path, state);
    return OfflineStep{std::move(respond), *session.key(), "respond"};
  } catch (const RejectError& e) {
    return OfflineStep{reject_for(nonce_of(incoming), e.reason()), std::nullopt,
                       std::string("failed: ") + e.what()};
  }
}

OfflineStep offline_finalize(const SessionConfig& cfg, const wire::Message& incoming,
                             const std::filesystem::path& state_path) {
  State state = load_state(state_path, "initiator", cfg);
  SeededRng rng(state.seed);
  auto [session, offer] = protocol::create_offer(cfg, rng);
  for (const auto& msg : state.received) {
    const auto* stored = std::get_if<RespondMsg>(&msg);
    if (stored == nullptr) {
      throw IoError("state file " + state_path.string() + " holds a non-RESPOND envelope");
    }
    const auto outcome = protocol::finalize(session, *stored, rng);
    if (!std::holds_alternative<protocol::ResumeDecision>(outcome)) {
      throw RejectError(RejectReason::out_of_order, "handshake in this state file is finished");
    }
  }
  if (const auto* reject = std::get_if<RejectMsg>(&incoming)) {
    throw ProtocolError("peer rejected the handshake: " + reject->reason);
  }
  const auto* respond = std::get_if<RespondMsg>(&incoming);
  if (respond == nullptr) {
    throw RejectError(RejectReason::out_of_order, "expected RESPOND");
  }
  auto outcome = protocol::finalize(session, *respond, rng);
  state.received.push_back(incoming);
  save_state(state_path, state);
  if (auto* key = std::get_if<KeyMaterial>(&outcome)) {
    return OfflineStep{session.confirm_message(), std::move(*key), "confirmed"};
  }
  if (auto* resume = std::get_if<protocol::ResumeDecision>(&outcome)) {
    return OfflineStep{wire::ResumeMsg{std::move(resume->offer)}, std::nullopt, "resume"};
  }
  return OfflineStep{reject_for(session.nonce(), RejectReason::key_mismatch), std::nullopt,
                     "failed: " + std::get<protocol::FailedOutcome>(outcome).diagnostic};
}

}  // namespace qrke::transport
