#pragma once

// Random sources for secret material. Everything that draws secrets takes a
// CryptoRng&, which only cryptographic generators implement; std::mt19937
// and friends cannot be passed in.

#include <array>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>

#include "qrke/bigint.hpp"

namespace qrke {

class CryptoRng {
 public:
  virtual ~CryptoRng() = default;

  /// Thread-safe.
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();
  /// Uniform on [0, bound); bound > 0.
  std::uint64_t uniform(std::uint64_t bound);
  /// Uniform on [0, bound); bound > 0.
  BigInt uniform(const BigInt& bound);
  /// Uniform on [0, 1) with 53 random bits.
  double uniform_unit();
};

/// OS-entropy generator (libsodium randombytes).
class SystemRng final : public CryptoRng {
 public:
  SystemRng();
  void fill(std::span<std::uint8_t> out) override;
};

/// Deterministic ChaCha20 keystream from a 64-bit seed. For tests and
/// reproducible experiments only; never for real sessions.
class SeededRng final : public CryptoRng {
 public:
  explicit SeededRng(std::uint64_t seed);
  /// Keyed by 32 seed octets (offline state files).
  explicit SeededRng(std::span<const std::uint8_t, 32> seed);
  void fill(std::span<std::uint8_t> out) override;

 private:
  void init(std::span<const std::uint8_t> seed);

  std::mutex mutex_;
  std::array<std::uint8_t, 32> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t used_ = 64;
};

/// SHA-256.
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace qrke
