#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace gsmsim {

/// Seedable random stream. Every stochastic operation in the library takes
/// one explicitly; parallel workers each own a derived stream so results do
/// not depend on scheduling or worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Standard normal N(0,1).
  double gaussian() { return normal_(engine_); }

  /// Circularly-symmetric complex normal CN(0,1): unit total variance split
  /// equally between real and imaginary parts.
  std::complex<double> complex_gaussian() {
    constexpr double half = 0.70710678118654752440;  // 1/sqrt(2)
    return {half * gaussian(), half * gaussian()};
  }

  /// Uniform in [0,1).
  double uniform() { return unit_(engine_); }

  /// Uniform integer in [0, bound). bound must be >= 1.
  std::uint64_t uniform_int(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  /// One fair bit.
  int bit() { return static_cast<int>(engine_() >> 63); }

  /// Derives a substream seed from a master seed and up to three stream
  /// coordinates (splitmix64 finalizer).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace gsmsim
