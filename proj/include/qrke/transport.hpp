#pragma once

// Handshake transports: a TCP byte stream carrying envelopes back to back,
// and an offline mode exchanging one envelope per file.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "qrke/protocol.hpp"
#include "qrke/rng.hpp"
#include "qrke/wire.hpp"

namespace qrke::transport {

struct Options {
  std::chrono::milliseconds timeout{30'000};  // per message
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// "host:port" or "[v6]:port". Throws ParameterError.
  static Endpoint parse(std::string_view text);
};

/// One stream socket. Move-only.
class Connection {
 public:
  explicit Connection(int fd, Options opts);
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  /// Throws IoError on resolve/connect failure or timeout.
  static Connection connect(const Endpoint& endpoint, Options opts = {});

  void send(const wire::Message& msg);
  /// Next envelope. Throws IoError on timeout or EOF, DecodeError on a bad
  /// envelope.
  wire::Message receive();

  /// Every byte sent and received is appended here while set.
  void record_to(std::string* transcript) { transcript_ = transcript; }

 private:
  void write_all(std::string_view bytes);

  int fd_ = -1;
  Options opts_;
  std::string buffer_;
  std::string* transcript_ = nullptr;
};

class Listener {
 public:
  /// Port 0 binds an ephemeral port. Throws IoError.
  explicit Listener(const Endpoint& endpoint, Options opts = {});
  Listener(Listener&& other) noexcept;
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  ~Listener();

  std::uint16_t port() const noexcept { return port_; }

  /// nullopt when `wait` elapses without a connection.
  std::optional<Connection> accept(std::chrono::milliseconds wait);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  Options opts_;
};

/// Full handshake as initiator over an open connection. Follows RESUME
/// rounds; throws ProtocolError when the peer rejects or resumes run out.
protocol::KeyMaterial run_initiator(Connection& conn, const protocol::SessionConfig& cfg,
                                    CryptoRng& rng);
protocol::KeyMaterial run_initiator(const std::string& endpoint,
                                    const protocol::SessionConfig& cfg, CryptoRng& rng,
                                    Options opts = {});

/// Full handshake as responder over an accepted connection.
protocol::KeyMaterial run_responder(Connection& conn, const protocol::SessionConfig& cfg,
                                    CryptoRng& rng);
/// Binds, accepts one connection and runs the responder on it.
protocol::KeyMaterial run_responder(const std::string& listen_endpoint,
                                    const protocol::SessionConfig& cfg, CryptoRng& rng,
                                    Options opts = {});

struct ServeOutcome {
  bool ok = false;
  std::string fingerprint;  // when ok
  std::string error;        // otherwise
};

/// Accept loop with one thread per connection. Returns after `max_sessions`
/// sessions (0 = unbounded) or once `stop` becomes true.
void serve(Listener& listener, const protocol::SessionConfig& cfg, CryptoRng& rng,
           std::size_t max_sessions, const std::function<void(const ServeOutcome&)>& on_done,
           const std::atomic<bool>* stop = nullptr);

// ---------------------------------------------------------------------------
// Offline file exchange
//
// A state file (created with mode 0600) holds a 32-octet seed and the
// envelopes received so far. Each invocation rebuilds its session by
// replaying them through a generator keyed by the seed, so selections are
// never written out.

void write_envelope(const std::filesystem::path& path, const wire::Message& msg);
wire::Message read_envelope(const std::filesystem::path& path);

struct OfflineStep {
  wire::Message outgoing;
  std::optional<protocol::KeyMaterial> key;
  std::string status;  // "offer", "respond", "confirmed", "resume", "failed: ..."
};

/// Initiator: new state file seeded from `entropy`, first OFFER. Throws
/// IoError if the state file exists.
OfflineStep offline_offer(const protocol::SessionConfig& cfg, const std::filesystem::path& state,
                          CryptoRng& entropy);

/// Responder: answers OFFER (creating the state file) or RESUME (replaying
/// it). A refused message yields a REJECT.
OfflineStep offline_respond(const protocol::SessionConfig& cfg, const wire::Message& incoming,
                            const std::filesystem::path& state, CryptoRng& entropy);

/// Initiator: consumes RESPOND; yields CONFIRM, RESUME or REJECT.
OfflineStep offline_finalize(const protocol::SessionConfig& cfg, const wire::Message& incoming,
                             const std::filesystem::path& state);

}  // namespace qrke::transport
