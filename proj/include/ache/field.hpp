#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ache/grid.hpp"

namespace ache {

/// Real scalar samples on a GridSpec. Immutable once built; all values finite.
class Field2D {
 public:
  Field2D(GridSpec grid, std::vector<double> values);

  static Field2D zeros(GridSpec grid);
  static Field2D constant(GridSpec grid, double value);

  template <class F>
  static Field2D sample(GridSpec grid, F&& f) {
    std::vector<double> v(grid.size());
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) v[grid.index(i, j)] = f(grid.x1(i), grid.x2(j));
    return Field2D(grid, std::move(v));
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

  Field2D operator+(const Field2D& other) const;
  Field2D operator-(const Field2D& other) const;
  Field2D operator*(double a) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Samples of a function of x2 alone at x2 = j/n.
class Field1D {
 public:
  explicit Field1D(std::vector<double> values);

  static Field1D zeros(int n);

  template <class F>
  static Field1D sample(int n, F&& f) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) v[j] = f(static_cast<double>(j) / n);
    return Field1D(std::move(v));
  }

  int n() const noexcept { return static_cast<int>(values_.size()); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](int j) const noexcept { return values_[j]; }

  Field1D operator+(const Field1D& other) const;
  Field1D operator-(const Field1D& other) const;
  Field1D operator*(double a) const;

 private:
  std::vector<double> values_;
};

/// Throws NumericalError("non-finite field") if any value is NaN or infinite.
void require_finite(std::span<const double> values);

}  // namespace ache
