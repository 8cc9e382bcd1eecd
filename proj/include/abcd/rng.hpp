#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace abcd {

// Deterministic random source shared by generators, model init, and tests.
//
// The engine is std::mt19937_64, whose raw output sequence is pinned by the
// standard. The value transforms (uniform, normal, bounded integers) are
// implemented here instead of std::*_distribution, whose results differ
// between standard libraries. A given seed therefore reproduces the same
// stream everywhere, up to libm rounding inside log/cos/sin.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; consumes two draws per generated pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [lo, hi], both inclusive, rejection sampled so every
  // value is equally likely.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("Rng::uniform_int: empty range");
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit span
    const std::uint64_t reject_below = (0 - range) % range;       // 2^64 mod range
    std::uint64_t x = engine_();
    while (x < reject_below) x = engine_();
    return lo + static_cast<std::int64_t>(x % range);
  }

  bool bernoulli(double prob) { return uniform01() < prob; }

  std::uint64_t raw() { return engine_(); }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace abcd
