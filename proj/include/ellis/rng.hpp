#pragma once

#include <cstdint>

namespace ellis {

// SplitMix64. Deterministic across platforms, unlike the standard
// distributions; every randomized battery in the lab draws from this so that
// reports are reproducible from their recorded seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform-enough draw in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Inclusive range.
  long long range(long long lo, long long hi) {
    return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool coin() { return (next() & 1) != 0; }

 private:
  std::uint64_t state_;
};

}  // namespace ellis
