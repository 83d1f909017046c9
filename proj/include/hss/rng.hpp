#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hss/bigint.hpp"

namespace hss {

/// Seeded random source. Every draw is derived from raw mt19937_64 output
/// (never from std::*_distribution) so streams are identical on every
/// standard library, which the byte-identical report guarantee depends on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling over the
  /// smallest covering power of two.
  BigInt uniform_below(const BigInt& bound) {
    if (bound <= 0) {
      throw Error(ErrorCode::invalid_params, "uniform_below needs a positive bound");
    }
    if (bound == 1) return 0;
    const BigInt top = bound - 1;
    const std::size_t bits = boost::multiprecision::msb(top) + 1;
    const std::size_t words = (bits + 63) / 64;
    const std::size_t excess = words * 64 - bits;
    for (;;) {
      BigInt candidate = 0;
      for (std::size_t w = 0; w < words; ++w) {
        candidate <<= 64;
        candidate |= next_u64();
      }
      candidate >>= excess;
      if (candidate < bound) return candidate;
    }
  }

  /// Uniform integer in [lo, hi], lo <= hi.
  BigInt uniform_between(const BigInt& lo, const BigInt& hi) { return lo + uniform_below(hi - lo + 1); }

  std::size_t uniform_index(std::size_t n) {
    return uniform_below(BigInt(n)).convert_to<std::size_t>();
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  /// Engine state in the textual form defined by the standard for
  /// mersenne_twister_engine; round-trips exactly through restore().
  std::string save_state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
  }

  void restore_state(const std::string& state) {
    std::istringstream in(state);
    in >> engine_;
    if (in.fail()) {
      throw Error(ErrorCode::corrupt_snapshot, "unreadable random engine state");
    }
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hss
