#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/miller_rabin.hpp>

#include "hss/error.hpp"

namespace hss {

using BigInt = boost::multiprecision::cpp_int;

/// Parses a non-negative base-10 integer. Leading '+' or '-', whitespace and
/// hex prefixes are rejected so that scenario files stay unambiguous.
inline BigInt parse_decimal(std::string_view text) {
  if (text.empty()) {
    throw Error(ErrorCode::invalid_params, "empty integer string");
  }
  for (char c : text) {
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::invalid_params, "not a decimal integer: '" + std::string(text) + "'");
    }
  }
  return BigInt(std::string(text));
}

inline std::string to_decimal(const BigInt& value) { return value.str(); }

/// Least non-negative residue of `value` modulo `modulus` (modulus > 0).
inline BigInt mod_floor(const BigInt& value, const BigInt& modulus) {
  BigInt r = value % modulus;
  if (r < 0) r += modulus;
  return r;
}

/// Inverse of `value` modulo `modulus` by the extended Euclidean algorithm.
/// Throws ZeroInverse when no inverse exists.
inline BigInt mod_inverse(const BigInt& value, const BigInt& modulus) {
  BigInt a = mod_floor(value, modulus);
  if (a == 0) {
    throw Error(ErrorCode::zero_inverse, "zero has no multiplicative inverse");
  }
  BigInt old_r = a, r = modulus;
  BigInt old_s = 1, s = 0;
  while (r != 0) {
    BigInt q = old_r / r;
    BigInt tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) {
    throw Error(ErrorCode::zero_inverse, "value is not invertible modulo " + modulus.str());
  }
  return mod_floor(old_s, modulus);
}

namespace detail {
inline constexpr std::uint64_t kTrialDivisionLimit = std::uint64_t{1} << 40;
}

/// Primality test: exact trial division below 2^40, Miller-Rabin with a
/// fixed-seed witness generator above (so results are reproducible).
inline bool is_prime(const BigInt& n) {
  if (n < 2) return false;
  if (n < 4) return true;
  if (n % 2 == 0) return false;
  if (n < detail::kTrialDivisionLimit) {
    const auto v = n.convert_to<std::uint64_t>();
    for (std::uint64_t d = 3; d * d <= v; d += 2) {
      if (v % d == 0) return false;
    }
    return true;
  }
  std::mt19937_64 witness_source(0x5eed5eedULL);
  return boost::multiprecision::miller_rabin_test(n, 40, witness_source);
}

}  // namespace hss
