#pragma once

#include <cstdint>

namespace gnncf {

/// Splitmix64 generator. Used instead of <random> distributions so that
/// generated graphs and sampled splits are bit-identical across platforms
/// and standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9E3779B97F4A7C15ULL) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Uniform in [0, 1).
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double real(double lo, double hi) { return lo + (hi - lo) * real(); }

 private:
  std::uint64_t state_;
};

}  // namespace gnncf
