#include "qrke/suite.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrke/error.hpp"
#include "qrke/rng.hpp"

namespace qrke {

namespace {

std::string join(const std::vector<std::uint32_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) {
      out.push_back(',');
    }
    out += std::to_string(values[i]);
  }
  return out;
}

std::uint64_t parse_number(std::string_view text, std::string_view what) {
  std::uint64_t value = 0;
  if (text.empty() || (text.size() > 1 && text[0] == '0')) {
    throw ParseError("suite descriptor: bad " + std::string(what));
  }
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value > UINT32_MAX) {
    throw ParseError("suite descriptor: bad " + std::string(what));
  }
  return value;
}

std::vector<std::uint32_t> parse_list(std::string_view text, std::string_view what) {
  std::vector<std::uint32_t> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(static_cast<std::uint32_t>(parse_number(item, what)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::string_view expect_field(std::string_view token, std::string_view key) {
  if (token.size() <= key.size() + 1 || token.substr(0, key.size()) != key ||
      token[key.size()] != '=') {
    throw ParseError("suite descriptor: expected " + std::string(key) + "=...");
  }
  return token.substr(key.size() + 1);
}

}  // namespace

std::string Suite::descriptor() const {
  std::ostringstream out;
  out << "SUITE v1 N=" << functions.size() << " M=" << functions.pool_size()
      << " W=" << join(functions.max_reps()) << " P=" << join(functions.primes())
      << " SEC=" << security_bits << " DIGITS=" << digits;
  return out.str();
}

std::string Suite::id() const {
  const std::string line = descriptor();
  const auto digest = sha256(std::span(reinterpret_cast<const std::uint8_t*>(line.data()), line.size()));
  return to_hex(std::span(digest).first(16));
}

Suite Suite::sized(strategy::FunctionSet functions, unsigned security_bits) {
  const int digits = strategy::required_precision(functions, security_bits);
  return Suite{std::move(functions), security_bits, digits};
}

Suite Suite::parse(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t space = line.find(' ', start);
    tokens.push_back(line.substr(start, space == std::string_view::npos ? std::string_view::npos
                                                                        : space - start));
    if (space == std::string_view::npos) {
      break;
    }
    start = space + 1;
  }
  if (tokens.size() != 8 || tokens[0] != "SUITE" || tokens[1] != "v1") {
    throw ParseError("suite descriptor must read 'SUITE v1 N= M= W= P= SEC= DIGITS='");
  }
  const auto n = parse_number(expect_field(tokens[2], "N"), "N");
  const auto m = parse_number(expect_field(tokens[3], "M"), "M");
  auto reps = parse_list(expect_field(tokens[4], "W"), "W");
  auto primes = parse_list(expect_field(tokens[5], "P"), "P");
  const auto sec = parse_number(expect_field(tokens[6], "SEC"), "SEC");
  const auto digits = parse_number(expect_field(tokens[7], "DIGITS"), "DIGITS");
  if (primes.size() != n || reps.size() != n) {
    throw ParseError("suite descriptor: N does not match the W/P list lengths");
  }
  if (!std::is_sorted(primes.begin(), primes.end())) {
    throw ParseError("suite descriptor: P must be ascending");
  }
  strategy::shared_digit_requirement(static_cast<unsigned>(sec));  // validates SEC
  if (digits < static_cast<std::uint64_t>(kMinDigits)) {
    throw ParseError("suite descriptor: DIGITS below minimum");
  }
  Suite suite{strategy::FunctionSet(std::move(primes), std::move(reps), static_cast<std::uint32_t>(m)),
              static_cast<unsigned>(sec), static_cast<int>(digits)};
  if (suite.descriptor() != line) {
    throw ParseError("suite descriptor is not in canonical form");
  }
  return suite;
}

std::vector<NamedSuite> shipped_suites(unsigned security_bits) {
  using strategy::FunctionSet;
  std::vector<NamedSuite> out;
  out.push_back({"4-2", Suite::sized(FunctionSet::first_primes_uniform(4, 2), security_bits), BigInt(2)});
  for (auto [n, w] : {std::pair{32u, 8u}, std::pair{64u, 4u}, std::pair{128u, 2u}}) {
    out.push_back({std::to_string(n) + "-" + std::to_string(w),
                   Suite::sized(FunctionSet::first_primes_uniform(n, w), security_bits),
                   strategy::default_exponent_floor()});
  }
  return out;
}

namespace {

std::optional<NamedSuite> load_suite_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return std::nullopt;
  }
  std::string line;
  std::getline(in, line);
  return NamedSuite{path.stem().string(), Suite::parse(line), strategy::default_exponent_floor()};
}

}  // namespace

std::vector<NamedSuite> suites_in_directory(const std::string& dir) {
  std::vector<NamedSuite> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".suite") {
      if (auto suite = load_suite_file(entry.path())) {
        out.push_back(std::move(*suite));
      }
    }
  }
  if (ec) {
    throw IoError("cannot read suite directory " + dir + ": " + ec.message());
  }
  std::sort(out.begin(), out.end(),
            [](const NamedSuite& a, const NamedSuite& b) { return a.name < b.name; });
  return out;
}

NamedSuite resolve_suite(std::string_view name, unsigned security_bits,
                         const std::optional<std::string>& suite_dir) {
  for (auto& s : shipped_suites(security_bits)) {
    if (s.name == name) {
      return s;
    }
  }
  if (suite_dir) {
    const auto path = std::filesystem::path(*suite_dir) / (std::string(name) + ".suite");
    if (auto suite = load_suite_file(path)) {
      return *suite;
    }
  }
  if (name.substr(0, 6) == "SUITE ") {
    return NamedSuite{"inline", Suite::parse(name), strategy::default_exponent_floor()};
  }
  throw ParameterError("unknown suite '" + std::string(name) + "'");
}

}  // namespace qrke
