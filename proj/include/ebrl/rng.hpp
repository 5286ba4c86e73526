#pragma once

// Keyed random streams. Every random draw of the sampler comes from a stream
// identified by (master seed, sweep, block, coordinate), so the output does not
// depend on the order in which coordinates are visited.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace ebrl {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class Block : std::uint64_t { Init = 1, Beta = 2, Z = 3, Y = 4, Lambda = 5, Generate = 6, Check = 7 };

/// SplitMix64 stream whose starting point is a hash of the key. Satisfies
/// UniformRandomBitGenerator, so it plugs into <random> distributions.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t seed, std::uint64_t sweep = 0, Block block = Block::Init,
                     std::uint64_t coord = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ sweep);
    h = splitmix64(h ^ static_cast<std::uint64_t>(block));
    state_ = splitmix64(h ^ coord);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniformOpen() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  /// log of a Gamma(shape, 1) draw. Shapes below one use the
  /// Gamma(shape + 1) * U^(1/shape) identity in log space, which stays finite
  /// where the direct draw would underflow.
  double logGamma(double shape) {
    if (shape >= 1.0) {
      std::gamma_distribution<double> g(shape, 1.0);
      double x;
      do x = g(*this);
      while (!(x > 0.0));
      return std::log(x);
    }
    return logGamma(shape + 1.0) + std::log(uniformOpen()) / shape;
  }

  /// Beta(a, b) draw strictly inside (0, 1).
  double beta(double a, double b) {
    const double lx = logGamma(a);
    const double ly = logGamma(b);
    const double m = std::max(lx, ly);
    const double log_den = m + std::log(std::exp(lx - m) + std::exp(ly - m));
    double v = std::exp(lx - log_den);
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    return v;
  }

 private:
  std::uint64_t state_;
};

}  // namespace ebrl
