#include "qrke/cli.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include "qrke/analysis.hpp"
#include "qrke/attack.hpp"
#include "qrke/error.hpp"
#include "qrke/protocol.hpp"
#include "qrke/suite.hpp"
#include "qrke/transport.hpp"

namespace qrke::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string suite = "4-2";
  unsigned security_bits = 128;
  int digits = 0;
  std::uint64_t seed = 0;
  bool insecure_testing = false;
  std::string out_dir = ".";
  std::string strategy = "combination";
  std::uint32_t casket_size = 0;
  CLI::Option* seed_option = nullptr;
};

struct KexOptions {
  std::string listen;
  std::string address;
  std::size_t sessions = 1;
  int timeout_ms = 30'000;
  std::string emit_key;
  bool allow_undersized = false;
  std::string in;
  std::string out;
  std::string state;
};

struct AttackOptions {
  std::size_t trials = 1;
  bool toy = false;
  std::uint64_t exponent_max = 1000;
  std::vector<std::string> moduli;
  std::int64_t width = attack::kDefaultSearchWidth;
  std::string csv;
  std::uint64_t r = 0;
  std::uint64_t s = 0;
  std::uint64_t min_degree = 200;
  std::uint64_t max_degree = 2000;
  std::string evaluator = "coefficients";
  int low_digits = 16;
};

struct AnalyzeOptions {
  std::size_t samples = 20'000;
  int positions = 40;
  std::size_t trials = 10'000;
  std::vector<int> grid{500, 1000, 2000, 4000};
  int repetitions = 3;
  std::vector<std::string> suites;
  double a = 2.0;
  std::string csv;
  std::string fit_csv;
};

struct Context {
  Globals g;
  KexOptions kex;
  AttackOptions attack;
  AnalyzeOptions analyze;
  std::string show_name;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

// ---------------------------------------------------------------------------
// Shared helpers

std::unique_ptr<CryptoRng> make_rng(const Context& c) {
  if (c.g.seed_option != nullptr && c.g.seed_option->count() > 0) {
    if (!c.g.insecure_testing) {
      throw ParameterError("--seed makes secrets predictable; it requires --insecure-testing");
    }
    return std::make_unique<SeededRng>(c.g.seed);
  }
  return std::make_unique<SystemRng>();
}

std::optional<std::string> suite_dir() {
  if (const char* dir = std::getenv("QRKE_SUITE_DIR"); dir != nullptr && *dir != '\0') {
    return std::string(dir);
  }
  return std::nullopt;
}

NamedSuite load_suite(const Context& c, const std::string& name) {
  NamedSuite named = resolve_suite(name, c.g.security_bits, suite_dir());
  if (c.g.digits > 0) {
    named.suite.digits = c.g.digits;
  }
  return named;
}

strategy::Strategy parse_strategy(const std::string& name) {
  if (name == "combination") {
    return strategy::Strategy::combination;
  }
  if (name == "casket") {
    return strategy::Strategy::casket;
  }
  if (name == "analytic") {
    return strategy::Strategy::analytic;
  }
  throw ParameterError("unknown strategy '" + name + "'");
}

protocol::SessionConfig session_config(const Context& c) {
  auto cfg = protocol::SessionConfig::for_suite(load_suite(c, c.g.suite));
  cfg.secret.strategy = parse_strategy(c.g.strategy);
  cfg.secret.casket_size = c.g.casket_size;
  cfg.allow_undersized = c.kex.allow_undersized;
  cfg.validate();
  return cfg;
}

fs::path output_path(const Context& c, const std::string& explicit_path, const char* name) {
  if (!explicit_path.empty()) {
    return explicit_path;
  }
  std::error_code ec;
  fs::create_directories(c.g.out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + c.g.out_dir + ": " + ec.message());
  }
  return fs::path(c.g.out_dir) / name;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  return out;
}

// Key files are the one place key octets leave the process.
void emit_key(const std::string& path, const protocol::KeyMaterial& key) {
  if (path.empty()) {
    return;
  }
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd < 0) {
    throw IoError("cannot open key file " + path);
  }
  ::fchmod(fd, 0600);
  const std::string line = to_hex(key.key) + "\n";
  const bool ok = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size());
  ::close(fd);
  if (!ok) {
    throw IoError("cannot write key file " + path);
  }
}

transport::Options transport_options(const Context& c) {
  if (c.kex.timeout_ms <= 0) {
    throw ParameterError("--timeout-ms must be positive");
  }
  return transport::Options{std::chrono::milliseconds(c.kex.timeout_ms)};
}

// ---------------------------------------------------------------------------
// suite

void cmd_suite_list(Context& c) {
  std::vector<NamedSuite> suites = shipped_suites(c.g.security_bits);
  if (auto dir = suite_dir()) {
    for (auto& s : suites_in_directory(*dir)) {
      suites.push_back(std::move(s));
    }
  }
  for (const auto& s : suites) {
    *c.out << s.name << '\t' << s.suite.descriptor() << '\n';
  }
}

void cmd_suite_show(Context& c) {
  const NamedSuite s = load_suite(c, c.show_name.empty() ? c.g.suite : c.show_name);
  const auto& fs = s.suite.functions;
  *c.out << "name: " << s.name << '\n'
         << "descriptor: " << s.suite.descriptor() << '\n'
         << "id: " << s.suite.id() << '\n'
         << "digits: " << s.suite.digits << '\n'
         << "required_precision: "
         << strategy::required_precision(fs, s.suite.security_bits) << '\n'
         << "log10_d_max: " << log10_of(fs.d_max()) << '\n'
         << "combinations: " << strategy::combination_count(fs).get_str() << '\n'
         << "exponent_floor: 10^" << (s.floor <= 1 ? 0.0 : log10_of(s.floor)) << '\n';
}

// ---------------------------------------------------------------------------
// kex

void report_key(Context& c, const protocol::KeyMaterial& key, const std::string& label) {
  *c.out << label << " fingerprint " << key.fingerprint() << '\n';
  emit_key(c.kex.emit_key, key);
}

void cmd_kex_serve(Context& c) {
  const auto cfg = session_config(c);
  auto rng = make_rng(c);
  transport::Listener listener(transport::Endpoint::parse(c.kex.listen), transport_options(c));
  *c.out << "listening on port " << listener.port() << std::endl;
  std::size_t failures = 0;
  std::string last_error;
  std::size_t index = 0;
  transport::serve(listener, cfg, *rng, c.kex.sessions, [&](const transport::ServeOutcome& o) {
    ++index;
    if (o.ok) {
      *c.out << "session " << index << " fingerprint " << o.fingerprint << std::endl;
    } else {
      ++failures;
      last_error = o.error;
      *c.err << "session " << index << " failed: " << o.error << std::endl;
    }
  });
  if (failures > 0) {
    throw ProtocolError(std::to_string(failures) + " session(s) failed; last: " + last_error);
  }
}

void cmd_kex_serve_with_keys(Context& c) {
  if (!c.kex.emit_key.empty() && c.kex.sessions != 1) {
    throw ParameterError("--emit-key with serve needs --sessions 1");
  }
  if (c.kex.emit_key.empty()) {
    cmd_kex_serve(c);
    return;
  }
  const auto cfg = session_config(c);
  auto rng = make_rng(c);
  transport::Listener listener(transport::Endpoint::parse(c.kex.listen), transport_options(c));
  *c.out << "listening on port " << listener.port() << std::endl;
  auto conn = listener.accept(std::chrono::milliseconds(c.kex.timeout_ms));
  if (!conn) {
    throw IoError("no initiator connected before the timeout");
  }
  report_key(c, transport::run_responder(*conn, cfg, *rng), "session 1");
}

void cmd_kex_connect(Context& c) {
  const auto cfg = session_config(c);
  auto rng = make_rng(c);
  report_key(c, transport::run_initiator(c.kex.address, cfg, *rng, transport_options(c)),
             "session");
}

void finish_offline(Context& c, const transport::OfflineStep& step) {
  transport::write_envelope(c.kex.out, step.outgoing);
  *c.out << "status " << step.status << '\n';
  if (step.key) {
    report_key(c, *step.key, "key");
  }
  if (step.status.rfind("failed", 0) == 0) {
    throw ProtocolError(step.status);
  }
}

void cmd_offline_offer(Context& c) {
  const auto cfg = session_config(c);
  auto rng = make_rng(c);
  finish_offline(c, transport::offline_offer(cfg, c.kex.state, *rng));
}

void cmd_offline_respond(Context& c) {
  const auto cfg = session_config(c);
  auto rng = make_rng(c);
  finish_offline(c, transport::offline_respond(cfg, transport::read_envelope(c.kex.in),
                                               c.kex.state, *rng));
}

void cmd_offline_finalize(Context& c) {
  const auto cfg = session_config(c);
  finish_offline(c,
                 transport::offline_finalize(cfg, transport::read_envelope(c.kex.in), c.kex.state));
}

// ---------------------------------------------------------------------------
// attack

// Decimal integer or 1eN.
BigInt parse_modulus(const std::string& text) {
  BigInt m;
  const auto e = text.find_first_of("eE");
  const std::string digits = e == std::string::npos ? text : text.substr(0, e);
  if (digits.empty() || m.set_str(digits, 10) != 0) {
    throw ParameterError("bad --modulus '" + text + "'");
  }
  if (e != std::string::npos) {
    const std::string exponent = text.substr(e + 1);
    if (exponent.empty() || exponent.size() > 5 ||
        exponent.find_first_not_of("0123456789") != std::string::npos) {
      throw ParameterError("bad --modulus '" + text + "'");
    }
    m *= pow10(std::stoul(exponent));
  }
  if (m < 2) {
    throw ParameterError("--modulus must be >= 2");
  }
  return m;
}

void cmd_attack_sieve(Context& c) {
  auto rng = make_rng(c);
  const fs::path path = output_path(c, c.attack.csv, "attack-sieve.csv");
  auto csv = open_csv(path);
  bool header = true;
  std::size_t broken = 0;
  for (std::size_t t = 0; t < c.attack.trials; ++t) {
    PrecisionCtx ctx(30);
    BigInt planted;
    Real x(ctx);
    Real y(ctx);
    BigInt bound;
    if (c.attack.toy) {
      if (c.attack.exponent_max < 2) {
        throw ParameterError("--exponent-max must be >= 2");
      }
      planted = BigInt(static_cast<unsigned long>(2 + rng->uniform(c.attack.exponent_max - 1)));
      bound = BigInt(static_cast<unsigned long>(c.attack.exponent_max));
      x = protocol::pick_public_x(ctx, *rng);
      y = chebyshev::t_analytic(planted, x, ctx);
    } else {
      const auto cfg = session_config(c);
      ctx = cfg.ctx();
      const auto secret = strategy::draw_secret(cfg.suite.functions, cfg.secret, *rng);
      planted = strategy::raw_exponent(secret);
      bound = strategy::max_exponent(cfg.suite.functions, cfg.secret);
      x = protocol::pick_public_x(ctx, *rng);
      y = protocol::wire_value(strategy::evaluate_secret(secret, x, ctx), ctx);
    }
    std::vector<BigInt> moduli;
    for (const auto& m : c.attack.moduli) {
      moduli.push_back(parse_modulus(m));
    }
    if (moduli.empty()) {
      moduli.push_back(c.attack.toy ? BigInt(1'000'000) : attack::default_modulus(bound));
    }
    bool found = false;
    for (const auto& m : moduli) {
      const auto result =
          attack::run_sieve_attack(x, y, ctx, m, {c.attack.width, true});
      attack::write_attack_csv(csv, m.get_str(), result, header);
      header = false;
      found = found || (result.verified && *result.verified == planted);
      *c.out << "trial " << t + 1 << " M=10^" << log10_of(m) << " checked " << result.work
             << " best_agreement " << result.best_agreement
             << (result.success ? " verified" : " none verified") << '\n';
    }
    broken += found ? 1 : 0;
  }
  *c.out << "broken " << broken << "/" << c.attack.trials << "\ncsv " << path.string() << '\n';
}

void cmd_attack_brute(Context& c) {
  auto rng = make_rng(c);
  const auto cfg = session_config(c);
  const PrecisionCtx ctx = cfg.ctx();
  const fs::path path = output_path(c, c.attack.csv, "attack-brute.csv");
  auto csv = open_csv(path);
  std::size_t recovered = 0;
  for (std::size_t t = 0; t < c.attack.trials; ++t) {
    const auto secret = strategy::draw_secret(cfg.suite.functions, cfg.secret, *rng);
    const Real x = protocol::pick_public_x(ctx, *rng);
    const Real y = protocol::wire_value(strategy::evaluate_secret(secret, x, ctx), ctx);
    const auto result = attack::brute_force_combinations(cfg.suite.functions, x, y, ctx);
    attack::write_attack_csv(csv, "-", result, t == 0);
    const bool ok = result.verified && *result.verified == strategy::raw_exponent(secret);
    recovered += ok ? 1 : 0;
    *c.out << "trial " << t + 1 << " evaluations " << result.work << " matches "
           << result.candidates.size() << (ok ? " recovered" : " not recovered") << '\n';
  }
  *c.out << "recovered " << recovered << "/" << c.attack.trials << "\ncsv " << path.string()
         << '\n';
  if (recovered != c.attack.trials) {
    throw PrecisionError("brute force missed a planted selection");
  }
}

void cmd_attack_double(Context& c) {
  auto rng = make_rng(c);
  const auto evaluator = c.attack.evaluator == "recurrence" ? attack::Evaluator::recurrence
                         : c.attack.evaluator == "coefficients"
                             ? attack::Evaluator::coefficients
                             : throw ParameterError("--evaluator must be coefficients or recurrence");
  const fs::path path = output_path(c, c.attack.csv, "double-demo.csv");
  auto csv = open_csv(path);
  csv << "r,s,degree,x,agreement_digits,first_disagreeing_digit,sign_mismatch,"
         "control_agreement_digits\n";
  const PrecisionCtx xctx(c.attack.low_digits);
  const bool fixed = c.attack.r > 0 && c.attack.s > 0;
  const std::size_t trials = fixed ? 1 : c.attack.trials;
  std::size_t first_digit_failures = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::uint64_t r = c.attack.r;
    std::uint64_t s = c.attack.s;
    if (!fixed) {
      do {
        r = 2 + rng->uniform(c.attack.max_degree / 2 - 1);
        s = 2 + rng->uniform(c.attack.max_degree / 2 - 1);
      } while (r * s < c.attack.min_degree || r * s > c.attack.max_degree);
    }
    const Real x = protocol::pick_public_x(xctx, *rng);
    const auto rep = attack::double_precision_divergence(r, s, x, evaluator, c.attack.low_digits);
    first_digit_failures += rep.first_disagreeing_digit == 1 ? 1 : 0;
    csv << r << ',' << s << ',' << rep.degree << ',' << to_decimal(x) << ',' << rep.agreement
        << ',' << rep.first_disagreeing_digit << ',' << (rep.sign_mismatch ? 1 : 0) << ','
        << rep.control_agreement << '\n';
  }
  *c.out << "first-digit disagreement " << first_digit_failures << "/" << trials << "\ncsv "
         << path.string() << '\n';
}

// ---------------------------------------------------------------------------
// analyze

void cmd_analyze_digits(Context& c) {
  auto rng = make_rng(c);
  const NamedSuite suite = load_suite(c, c.g.suite);
  const auto sample = analysis::sample_shared_digits(suite, c.analyze.samples,
                                                     c.analyze.positions, *rng);
  const auto tests = analysis::digit_uniformity(sample, 1, c.analyze.positions);
  const fs::path path = output_path(c, c.analyze.csv, "digits.csv");
  auto csv = open_csv(path);
  analysis::write_digit_csv(csv, tests);
  *c.out << "samples " << sample.size << " (degenerate skipped " << sample.degenerate_skipped
         << ")\ncsv " << path.string() << '\n';
}

void cmd_analyze_magnitude(Context& c) {
  auto rng = make_rng(c);
  const NamedSuite suite = load_suite(c, c.g.suite);
  const auto report = analysis::magnitude_report(suite.suite.functions, c.analyze.trials, *rng);
  const fs::path path = output_path(c, c.analyze.csv, "magnitude.csv");
  auto csv = open_csv(path);
  analysis::write_magnitude_csv(csv, report);
  const auto& d = report.distribution;
  *c.out << "mean_log10 " << d.mean << " expected " << d.expected_mean << "\nstddev_log10 "
         << d.stddev << " expected " << d.expected_stddev << "\nmode_log10 " << report.mode_log10
         << "\nunimodal " << (report.unimodal ? "yes" : "no") << "\ncsv " << path.string()
         << '\n';
}

void cmd_analyze_scaling(Context& c) {
  auto rng = make_rng(c);
  std::vector<NamedSuite> suites;
  const auto names = c.analyze.suites.empty() ? std::vector<std::string>{c.g.suite}
                                              : c.analyze.suites;
  for (const auto& name : names) {
    suites.push_back(load_suite(c, name));
  }
  const auto report =
      analysis::measure_scaling(suites, c.analyze.grid, c.analyze.repetitions, *rng);
  const fs::path path = output_path(c, c.analyze.csv, "scaling.csv");
  const fs::path fit_path = output_path(c, c.analyze.fit_csv, "scaling-fit.csv");
  auto csv = open_csv(path);
  analysis::write_scaling_csv(csv, report);
  auto fit_csv = open_csv(fit_path);
  analysis::write_fit_csv(fit_csv, report);
  for (const auto& f : report.fits) {
    *c.out << f.suite << " exponent " << f.exponent << " r_squared " << f.r_squared << '\n';
  }
  *c.out << "csv " << path.string() << "\nfit " << fit_path.string() << '\n';
}

void cmd_analyze_cost(Context& c) {
  std::vector<NamedSuite> suites;
  if (c.analyze.suites.empty()) {
    suites = shipped_suites(c.g.security_bits);
  } else {
    for (const auto& name : c.analyze.suites) {
      suites.push_back(load_suite(c, name));
    }
  }
  const fs::path path = output_path(c, c.analyze.csv, "cost.csv");
  auto csv = open_csv(path);
  csv << "suite,digits,a,storage_units,time_units\n";
  for (const auto& s : suites) {
    const auto cost = analysis::estimate_cost(s.suite.functions, s.suite.digits, c.analyze.a);
    csv << s.name << ',' << s.suite.digits << ',' << c.analyze.a << ',' << cost.storage_units
        << ',' << cost.time_units << '\n';
    *c.out << s.name << " storage " << cost.storage_units << " time " << cost.time_units << '\n';
  }
  *c.out << "csv " << path.string() << '\n';
}

// ---------------------------------------------------------------------------
// Command tree

using Handler = void (*)(Context&);

CLI::App* leaf(CLI::App* parent, const std::string& name, const std::string& description,
               Context& c, Handler handler) {
  CLI::App* sub = parent->add_subcommand(name, description);
  sub->fallthrough();
  sub->callback([&c, handler] { handler(c); });
  return sub;
}

std::unique_ptr<CLI::App> build(Context& c) {
  auto app = std::make_unique<CLI::App>(
      "Key exchange over composed Chebyshev polynomials with arbitrary-precision reals.",
      "qrke");
  app->require_subcommand(1);
  app->parse_complete_callback([&c] {
    if (c.g.seed_option->count() > 0 && !c.g.insecure_testing) {
      throw ParameterError("--seed makes secrets predictable; it requires --insecure-testing");
    }
  });
  app->add_option("--suite", c.g.suite, "Suite name, file stem under QRKE_SUITE_DIR, or an "
                                        "inline 'SUITE v1 ...' descriptor")
      ->capture_default_str();
  app->add_option("--security-bits", c.g.security_bits, "128 or 256")
      ->check(CLI::IsMember({128u, 256u}))
      ->capture_default_str();
  app->add_option("--digits", c.g.digits, "Override the suite digit budget");
  c.g.seed_option =
      app->add_option("--seed", c.g.seed, "Deterministic generator seed (needs --insecure-testing)");
  app->add_flag("--insecure-testing", c.g.insecure_testing,
                "Allow --seed; secrets become reproducible");
  app->add_option("--out-dir", c.g.out_dir, "Directory for CSV outputs")->capture_default_str();
  app->add_option("--strategy", c.g.strategy, "combination, casket or analytic")
      ->check(CLI::IsMember({"combination", "casket", "analytic"}))
      ->capture_default_str();
  app->add_option("--casket-size", c.g.casket_size, "Multiset size r for the casket strategy");

  // suite
  auto* suite = app->add_subcommand("suite", "Inspect suites");
  suite->require_subcommand(1);
  suite->fallthrough();
  leaf(suite, "list", "Print every known suite descriptor", c, cmd_suite_list);
  leaf(suite, "show", "Print one suite with its required precision", c, cmd_suite_show)
      ->add_option("name", c.show_name, "Suite to show (default: --suite)");

  // kex
  auto* kex = app->add_subcommand("kex", "Run handshakes");
  kex->require_subcommand(1);
  kex->fallthrough();
  const auto common_kex = [&c](CLI::App* sub) {
    sub->add_option("--timeout-ms", c.kex.timeout_ms, "Per-message timeout")
        ->capture_default_str();
    sub->add_option("--emit-key", c.kex.emit_key, "Append the hex key to this file (mode 0600)");
    sub->add_flag("--allow-undersized", c.kex.allow_undersized,
                  "Accept digit budgets below the required precision (fault injection)");
  };
  auto* serve = leaf(kex, "serve", "Responder: accept initiators", c, cmd_kex_serve_with_keys);
  serve->add_option("--listen", c.kex.listen, "host:port to bind")->required();
  serve->add_option("--sessions", c.kex.sessions, "Sessions to serve, 0 = forever")
      ->capture_default_str();
  common_kex(serve);
  auto* connect = leaf(kex, "connect", "Initiator: connect to a responder", c, cmd_kex_connect);
  connect->add_option("address", c.kex.address, "host:port of the responder")->required();
  common_kex(connect);

  auto* offline = kex->add_subcommand("offline", "Handshake through envelope files");
  offline->require_subcommand(1);
  offline->fallthrough();
  auto* offer = leaf(offline, "offer", "Initiator: write the OFFER", c, cmd_offline_offer);
  offer->add_option("--out", c.kex.out, "Envelope file to write")->required();
  offer->add_option("--state", c.kex.state, "Initiator state file to create")->required();
  common_kex(offer);
  auto* respond = leaf(offline, "respond", "Responder: answer an OFFER or RESUME", c,
                       cmd_offline_respond);
  respond->add_option("--in", c.kex.in, "Envelope file to read")->required();
  respond->add_option("--out", c.kex.out, "Envelope file to write")->required();
  respond->add_option("--state", c.kex.state, "Responder state file")->required();
  common_kex(respond);
  auto* finalize = leaf(offline, "finalize", "Initiator: consume the RESPOND", c,
                        cmd_offline_finalize);
  finalize->add_option("--in", c.kex.in, "Envelope file to read")->required();
  finalize->add_option("--out", c.kex.out, "Envelope file to write")->required();
  finalize->add_option("--state", c.kex.state, "Initiator state file")->required();
  common_kex(finalize);

  // attack
  auto* attack = app->add_subcommand("attack", "Attack experiments");
  attack->require_subcommand(1);
  attack->fallthrough();
  auto* sieve = leaf(attack, "sieve", "Diophantine sieve on planted secrets", c, cmd_attack_sieve);
  sieve->add_option("--trials", c.attack.trials, "Planted instances")->capture_default_str();
  sieve->add_flag("--toy", c.attack.toy, "30 digits, exponent in [2, --exponent-max]");
  sieve->add_option("--exponent-max", c.attack.exponent_max, "Largest toy exponent")
      ->capture_default_str();
  sieve->add_option("--modulus", c.attack.moduli, "Modulus M, integer or 1eN (repeat to sweep)");
  sieve->add_option("--width", c.attack.width, "Residual search width")->capture_default_str();
  sieve->add_option("--csv", c.attack.csv, "CSV path (default <out-dir>/attack-sieve.csv)");
  auto* brute = leaf(attack, "brute", "Exhaustive combination search on planted secrets", c,
                     cmd_attack_brute);
  brute->add_option("--trials", c.attack.trials, "Planted instances")->capture_default_str();
  brute->add_option("--csv", c.attack.csv, "CSV path (default <out-dir>/attack-brute.csv)");
  auto* dbl = leaf(attack, "double-demo", "Composition order disagreement at low precision", c,
                   cmd_attack_double);
  dbl->add_option("--r", c.attack.r, "First degree (with --s: single run)");
  dbl->add_option("--s", c.attack.s, "Second degree");
  dbl->add_option("--trials", c.attack.trials, "Random (r, s, x) draws")->capture_default_str();
  dbl->add_option("--min-degree", c.attack.min_degree, "Smallest r*s drawn")
      ->capture_default_str();
  dbl->add_option("--max-degree", c.attack.max_degree, "Largest r*s drawn")
      ->capture_default_str();
  dbl->add_option("--evaluator", c.attack.evaluator, "coefficients or recurrence")
      ->capture_default_str();
  dbl->add_option("--low-digits", c.attack.low_digits, "Low precision in digits")
      ->capture_default_str();
  dbl->add_option("--csv", c.attack.csv, "CSV path (default <out-dir>/double-demo.csv)");

  // analyze
  auto* analyze = app->add_subcommand("analyze", "Statistics and cost studies");
  analyze->require_subcommand(1);
  analyze->fallthrough();
  auto* digits = leaf(analyze, "digits", "Per-position digit chi-square of shared values", c,
                      cmd_analyze_digits);
  digits->add_option("--samples", c.analyze.samples, "Shared values")->capture_default_str();
  digits->add_option("--positions", c.analyze.positions, "Leading positions tested")
      ->capture_default_str();
  digits->add_option("--csv", c.analyze.csv, "CSV path (default <out-dir>/digits.csv)");
  auto* magnitude = leaf(analyze, "magnitude", "Histogram of log10 secret exponents", c,
                         cmd_analyze_magnitude);
  magnitude->add_option("--trials", c.analyze.trials, "Draws")->capture_default_str();
  magnitude->add_option("--csv", c.analyze.csv, "CSV path (default <out-dir>/magnitude.csv)");
  auto* scaling = leaf(analyze, "scaling", "Time against digits, log-log fit", c,
                       cmd_analyze_scaling);
  scaling->add_option("--grid", c.analyze.grid, "Digit budgets")->delimiter(',');
  scaling->add_option("--reps", c.analyze.repetitions, "Repetitions per point")
      ->capture_default_str();
  scaling->add_option("--suites", c.analyze.suites, "Suites to time (default: --suite)")
      ->delimiter(',');
  scaling->add_option("--csv", c.analyze.csv, "Raw CSV path (default <out-dir>/scaling.csv)");
  scaling->add_option("--fit-csv", c.analyze.fit_csv,
                      "Fit CSV path (default <out-dir>/scaling-fit.csv)");
  auto* cost = leaf(analyze, "cost", "Storage and time estimates", c, cmd_analyze_cost);
  cost->add_option("--a", c.analyze.a, "Time exponent in [1.4, 2]")->capture_default_str();
  cost->add_option("--suites", c.analyze.suites, "Suites (default: all shipped)")
      ->delimiter(',');
  cost->add_option("--csv", c.analyze.csv, "CSV path (default <out-dir>/cost.csv)");
  return app;
}

void collect_paths(CLI::App* app, std::vector<std::string>& prefix,
                   std::vector<std::vector<std::string>>& out) {
  for (CLI::App* sub : app->get_subcommands({})) {
    prefix.push_back(sub->get_name());
    out.push_back(prefix);
    collect_paths(sub, prefix, out);
    prefix.pop_back();
  }
}

CLI::App* find_path(CLI::App* app, const std::vector<std::string>& path) {
  for (const auto& name : path) {
    app = app->get_subcommand(name);
  }
  return app;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context c;
  c.out = &out;
  c.err = &err;
  auto app = build(c);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app->parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorFamily::config);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.family());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

std::vector<std::vector<std::string>> command_paths() {
  Context c;
  auto app = build(c);
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> prefix;
  collect_paths(app.get(), prefix, out);
  return out;
}

std::vector<std::string> option_names(const std::vector<std::string>& path) {
  Context c;
  auto app = build(c);
  std::vector<std::string> out;
  for (const CLI::Option* opt : find_path(app.get(), path)->get_options()) {
    for (const auto& name : opt->get_lnames()) {
      out.push_back("--" + name);
    }
    if (opt->get_lnames().empty() && opt->get_snames().empty()) {
      out.push_back(opt->get_name());
    }
  }
  return out;
}

std::string help_text(const std::vector<std::string>& path) {
  Context c;
  auto app = build(c);
  CLI::App* target = find_path(app.get(), path);
  return target->help();
}

}  // namespace qrke::cli
