#include <doctest.h>

#include <sys/stat.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "qrke/error.hpp"
#include "qrke/transport.hpp"

using namespace qrke;
using namespace qrke::transport;
namespace fs = std::filesystem;

namespace {

protocol::SessionConfig test_config() {
  return protocol::SessionConfig::for_suite(resolve_suite("4-2", 128, std::nullopt));
}

fs::path scratch(const char* name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct LoopbackRun {
  protocol::KeyMaterial initiator;
  protocol::KeyMaterial responder;
  std::string transcript;
};

LoopbackRun loopback(std::uint64_t seed_a, std::uint64_t seed_b) {
  const auto cfg = test_config();
  Listener listener(Endpoint::parse("127.0.0.1:0"), {std::chrono::milliseconds(5000)});
  LoopbackRun run;
  std::exception_ptr failure;
  std::thread server([&] {
    try {
      SeededRng rng(seed_b);
      auto conn = listener.accept(std::chrono::milliseconds(5000));
      if (!conn) {
        throw IoError("no initiator");
      }
      run.responder = run_responder(*conn, cfg, rng);
    } catch (...) {
      failure = std::current_exception();
    }
  });
  SeededRng rng(seed_a);
  auto conn = Connection::connect(Endpoint{"127.0.0.1", listener.port()},
                                  {std::chrono::milliseconds(5000)});
  conn.record_to(&run.transcript);
  run.initiator = run_initiator(conn, cfg, rng);
  server.join();
  if (failure) {
    std::rethrow_exception(failure);
  }
  return run;
}

}  // namespace

TEST_CASE("endpoint parsing") {
  const auto v4 = Endpoint::parse("127.0.0.1:8080");
  CHECK(v4.host == "127.0.0.1");
  CHECK(v4.port == 8080);
  const auto v6 = Endpoint::parse("[::1]:9");
  CHECK(v6.host == "::1");
  CHECK(v6.port == 9);
  for (const char* bad : {"", "host", "host:", "host:70000", ":80", "[::1:80", "h:8x"}) {
    CHECK_THROWS_AS(Endpoint::parse(bad), ParameterError);
  }
}

TEST_CASE("loopback handshake agrees and transcripts are deterministic") {
  const auto a = loopback(1, 2);
  CHECK(a.initiator.key == a.responder.key);
  CHECK(a.transcript.find("QRKE/1 OFFER\n") == 0);
  CHECK(a.transcript.find("QRKE/1 CONFIRM\n") != std::string::npos);
  const auto b = loopback(1, 2);
  CHECK(a.transcript == b.transcript);
  const auto c = loopback(3, 2);
  CHECK(a.transcript != c.transcript);
}

TEST_CASE("silent peer times out") {
  Listener listener(Endpoint::parse("127.0.0.1:0"));
  SeededRng rng(4);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(run_initiator("127.0.0.1:" + std::to_string(listener.port()), test_config(), rng,
                                {std::chrono::milliseconds(300)}),
                  IoError);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
  CHECK_THROWS_AS(Connection::connect(Endpoint{"127.0.0.1", 1}, {std::chrono::milliseconds(300)}),
                  IoError);
}

TEST_CASE("serve handles concurrent sessions") {
  const auto cfg = test_config();
  Listener listener(Endpoint::parse("127.0.0.1:0"));
  std::vector<ServeOutcome> outcomes;
  std::mutex mutex;
  std::thread server([&] {
    SeededRng rng(5);
    serve(listener, cfg, rng, 3, [&](const ServeOutcome& o) {
      std::lock_guard lock(mutex);
      outcomes.push_back(o);
    });
  });
  std::vector<std::thread> clients;
  std::vector<std::string> fingerprints(3);
  for (int i = 0; i < 3; ++i) {
    clients.emplace_back([&, i] {
      SeededRng rng(100 + static_cast<std::uint64_t>(i));
      fingerprints[static_cast<std::size_t>(i)] =
          run_initiator("127.0.0.1:" + std::to_string(listener.port()), cfg, rng).fingerprint();
    });
  }
  for (auto& t : clients) {
    t.join();
  }
  server.join();
  REQUIRE(outcomes.size() == 3);
  for (const auto& o : outcomes) {
    CHECK(o.ok);
    CHECK(std::find(fingerprints.begin(), fingerprints.end(), o.fingerprint) !=
          fingerprints.end());
  }
}

TEST_CASE("offline exchange through files") {
  const auto dir = scratch("qrke-offline-test");
  const auto cfg = test_config();
  SeededRng entropy(6);
  auto step = offline_offer(cfg, dir / "i.state", entropy);
  CHECK(step.status == "offer");
  write_envelope(dir / "offer.env", step.outgoing);
  CHECK_THROWS_AS(offline_offer(cfg, dir / "i.state", entropy), IoError);

  struct stat st {};
  REQUIRE(::stat((dir / "i.state").c_str(), &st) == 0);
  CHECK((st.st_mode & 0777) == 0600);

  auto reply = offline_respond(cfg, read_envelope(dir / "offer.env"), dir / "r.state", entropy);
  REQUIRE(reply.key.has_value());
  write_envelope(dir / "reply.env", reply.outgoing);
  auto done = offline_finalize(cfg, read_envelope(dir / "reply.env"), dir / "i.state");
  REQUIRE(done.key.has_value());
  CHECK(done.status == "confirmed");
  CHECK(done.key->fingerprint() == reply.key->fingerprint());
  CHECK(wire::type_of(done.outgoing) == wire::MsgType::confirm);
  CHECK_THROWS_AS(offline_finalize(cfg, read_envelope(dir / "reply.env"), dir / "i.state"),
                  protocol::RejectError);

  // The state file holds no selection and no shared digits.
  std::ifstream in(dir / "i.state");
  const std::string state((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(state.find("QRKE-STATE/1 initiator") == 0);
  CHECK(state.find(done.key->digit_window.substr(0, 20)) == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("offline responder answers garbage with REJECT") {
  const auto dir = scratch("qrke-offline-reject");
  SeededRng entropy(7);
  auto cfg = test_config();
  auto step = offline_offer(cfg, dir / "i.state", entropy);
  auto offer = std::get<protocol::OfferMsg>(step.outgoing);
  offer.suite_id = std::string(32, '0');
  auto reply = offline_respond(cfg, offer, dir / "r.state", entropy);
  REQUIRE(wire::type_of(reply.outgoing) == wire::MsgType::reject);
  CHECK(std::get<protocol::RejectMsg>(reply.outgoing).reason == "unknown-suite");
  CHECK_FALSE(reply.key.has_value());
  fs::remove_all(dir);
}
