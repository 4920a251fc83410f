#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ache {

/// Seeded generator with platform-independent output. std::mt19937_64's
/// sequence is fixed by the standard; the distributions below are written
/// out by hand because std:: distributions are implementation-defined.
class Rng {
 public:
  static constexpr const char* algorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ache
