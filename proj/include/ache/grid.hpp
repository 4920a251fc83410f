#pragma once

#include <cstddef>

namespace ache {

/// Uniform grid on the unit torus [0,1)^2. Row index runs along x2, column
/// index along x1; nodes are x1 = i/nx, x2 = j/ny.
struct GridSpec {
  int nx = 0;
  int ny = 0;

  GridSpec(int nx, int ny);

  std::size_t size() const noexcept { return static_cast<std::size_t>(nx) * ny; }
  double x1(int i) const noexcept { return static_cast<double>(i) / nx; }
  double x2(int j) const noexcept { return static_cast<double>(j) / ny; }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * nx + i;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Throws ParameterError unless n is even and at least 8.
void require_grid_extent(int n, const char* what);

}  // namespace ache
