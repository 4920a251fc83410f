#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ache/field.hpp"
#include "ache/rng.hpp"
#include "ache/spectral.hpp"

namespace testing {

inline constexpr double pi = std::numbers::pi;

inline std::vector<double> to_vector(std::span<const double> v) { return {v.begin(), v.end()}; }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double sup(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Seeded mean-zero field with Fourier support in |k1|, |k2| <= kmax.
inline ache::Field2D random_bandlimited(ache::GridSpec g, int kmax, std::uint64_t seed) {
  ache::Rng rng(seed);
  ache::Spectrum2D s(g);
  for (int k2 = -kmax; k2 <= kmax; ++k2)
    for (int k1 = 0; k1 <= kmax; ++k1) {
      if (k1 == 0 && k2 <= 0) continue;  // keep real symmetry and zero mean
      const double re = rng.normal(), im = rng.normal();
      s(s.row_of(k2), k1) = ache::cplx{re, im};
      if (k1 == 0) s(s.row_of(-k2), 0) = ache::cplx{re, -im};
    }
  return ache::inverse(s);
}

}  // namespace testing
