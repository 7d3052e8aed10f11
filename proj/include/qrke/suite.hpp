#pragma once

// Suite descriptors: the public parameter bundle both parties must share.
//
//   SUITE v1 N=<n> M=<m> W=<w1,..> P=<p1,..> SEC=<bits> DIGITS=<digits>
//
// The suite id sent in handshakes is the hex form of the first 16 bytes of
// SHA-256 over that exact line.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrke/realfield.hpp"
#include "qrke/strategy.hpp"

namespace qrke {

struct Suite {
  strategy::FunctionSet functions;
  unsigned security_bits = 128;
  int digits = 0;

  std::string descriptor() const;
  std::string id() const;
  PrecisionCtx ctx() const { return PrecisionCtx(digits); }

  /// Suite whose DIGITS equals required_precision(functions, bits).
  static Suite sized(strategy::FunctionSet functions, unsigned security_bits);

  /// Strict parse of a descriptor line. Throws ParseError / ParameterError.
  static Suite parse(std::string_view line);
};

struct NamedSuite {
  std::string name;
  Suite suite;
  /// Local draw policy: the security floor for secret exponents.
  BigInt floor;
};

/// The shipped configurations: "4-2" (test suite), "32-8", "64-4", "128-2".
std::vector<NamedSuite> shipped_suites(unsigned security_bits = 128);

/// Looks `name` up among the shipped suites, then as `<dir>/<name>.suite` in
/// `suite_dir` (when given), then tries to parse it as an inline descriptor.
/// Throws ParameterError when nothing matches.
NamedSuite resolve_suite(std::string_view name, unsigned security_bits,
                         const std::optional<std::string>& suite_dir);

/// Descriptor files (`*.suite`) found in a directory, sorted by name.
std::vector<NamedSuite> suites_in_directory(const std::string& dir);

}  // namespace qrke
