#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <string>

namespace qrke {

using BigInt = mpz_class;

/// Exact number of decimal digits of |n| (0 has one digit).
inline std::size_t decimal_length(const BigInt& n) {
  std::size_t len = mpz_sizeinbase(n.get_mpz_t(), 10);
  // mpz_sizeinbase may overshoot by one for base 10.
  if (len > 1) {
    BigInt threshold;
    mpz_ui_pow_ui(threshold.get_mpz_t(), 10, static_cast<unsigned long>(len - 1));
    if (abs(n) < threshold) {
      --len;
    }
  }
  return len;
}

/// log10(n) for n > 0, accurate to double precision even for huge n.
double log10_of(const BigInt& n);

inline BigInt pow10(unsigned long exponent) {
  BigInt out;
  mpz_ui_pow_ui(out.get_mpz_t(), 10, exponent);
  return out;
}

inline BigInt big_pow(unsigned long base, unsigned long exponent) {
  BigInt out;
  mpz_ui_pow_ui(out.get_mpz_t(), base, exponent);
  return out;
}

inline std::string to_string(const BigInt& n) { return n.get_str(10); }

}  // namespace qrke
