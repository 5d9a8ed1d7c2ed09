// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace confield {

namespace detail {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic counter-free RNG (splitmix64 core) with cheap keyed stream
/// derivation. A stream is fully determined by (seed, keys...), never by call
/// order elsewhere in the program, so per-agent / per-pixel streams stay
/// bit-identical between sequential and parallel execution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(detail::mix64(seed)) {}

  /// Derives an independent child stream; does not disturb this stream.
  Rng fork(std::uint64_t key) const {
    Rng child(0);
    child.state_ = detail::mix64(state_ ^ detail::mix64(key ^ 0xa0761d6478bd642full));
    return child;
  }

  static Rng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    Rng r(seed);
    for (std::uint64_t k : keys) r = r.fork(k);
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace confield
