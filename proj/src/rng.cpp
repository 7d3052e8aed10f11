#include "qrke/rng.hpp"

#include <sodium.h>

#include <cstring>
#include <string>
#include <vector>

#include "qrke/error.hpp"

namespace qrke {

namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) {
    throw IoError("libsodium initialisation failed");
  }
}

}  // namespace

std::uint64_t CryptoRng::next_u64() {
  std::array<std::uint8_t, 8> bytes{};
  fill(bytes);
  std::uint64_t v = 0;
  for (auto b : bytes) {
    v = (v << 8) | b;
  }
  return v;
}

std::uint64_t CryptoRng::uniform(std::uint64_t bound) {
  if (bound == 0) {
    throw ParameterError("uniform: bound must be positive");
  }
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) {
      return v % bound;
    }
  }
}

BigInt CryptoRng::uniform(const BigInt& bound) {
  if (sgn(bound) <= 0) {
    throw ParameterError("uniform: bound must be positive");
  }
  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const std::size_t bytes = (bits + 7) / 8;
  const unsigned excess = static_cast<unsigned>(bytes * 8 - bits);
  std::vector<std::uint8_t> buffer(bytes);
  BigInt candidate;
  for (;;) {
    fill(buffer);
    buffer[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
    mpz_import(candidate.get_mpz_t(), bytes, 1, 1, 1, 0, buffer.data());
    if (candidate < bound) {
      return candidate;
    }
  }
}

double CryptoRng::uniform_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

SystemRng::SystemRng() { ensure_sodium(); }

void SystemRng::fill(std::span<std::uint8_t> out) {
  randombytes_buf(out.data(), out.size());
}

SeededRng::SeededRng(std::uint64_t seed) {
  std::array<std::uint8_t, 8> seed_bytes{};
  for (int i = 0; i < 8; ++i) {
    seed_bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  }
  init(seed_bytes);
}

SeededRng::SeededRng(std::span<const std::uint8_t, 32> seed) { init(seed); }

void SeededRng::init(std::span<const std::uint8_t> seed) {
  ensure_sodium();
  static constexpr char kDomain[] = "qrke-seeded-rng";
  crypto_generichash(key_.data(), key_.size(), seed.data(), seed.size(),
                     reinterpret_cast<const unsigned char*>(kDomain), sizeof(kDomain) - 1);
}

void SeededRng::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(mutex_);
  static constexpr std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> kNonce{};
  std::size_t written = 0;
  while (written < out.size()) {
    if (used_ == buffer_.size()) {
      buffer_.fill(0);
      crypto_stream_chacha20_xor_ic(buffer_.data(), buffer_.data(), buffer_.size(),
                                    kNonce.data(), block_++, key_.data());
      used_ = 0;
    }
    const std::size_t take = std::min(out.size() - written, buffer_.size() - used_);
    std::memcpy(out.data() + written, buffer_.data() + used_, take);
    used_ += take;
    written += take;
  }
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

}  // namespace qrke
