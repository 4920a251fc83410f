#include "ache/field.hpp"

#include <cmath>
#include <string>

#include "ache/error.hpp"

namespace ache {

void require_grid_extent(int n, const char* what) {
  if (n < 8 || n % 2 != 0)
    throw ParameterError(std::string(what) + " must be an even integer >= 8, got " +
                         std::to_string(n));
}

GridSpec::GridSpec(int nx_, int ny_) : nx(nx_), ny(ny_) {
  require_grid_extent(nx, "nx");
  require_grid_extent(ny, "ny");
}

void require_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) throw NumericalError("non-finite field");
}

Field2D::Field2D(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ParameterError("field size " + std::to_string(values_.size()) +
                         " does not match grid " + std::to_string(grid_.nx) + "x" +
                         std::to_string(grid_.ny));
  require_finite(values_);
}

Field2D Field2D::zeros(GridSpec grid) { return constant(grid, 0.0); }

Field2D Field2D::constant(GridSpec grid, double value) {
  return Field2D(grid, std::vector<double>(grid.size(), value));
}

namespace {
template <class F>
std::vector<double> zip(std::span<const double> a, std::span<const double> b, F op) {
  if (a.size() != b.size()) throw ParameterError("field shapes differ");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}
}  // namespace

Field2D Field2D::operator+(const Field2D& o) const {
  if (!(grid_ == o.grid_)) throw ParameterError("field grids differ");
  return Field2D(grid_, zip(values_, o.values_, [](double x, double y) { return x + y; }));
}

Field2D Field2D::operator-(const Field2D& o) const {
  if (!(grid_ == o.grid_)) throw ParameterError("field grids differ");
  return Field2D(grid_, zip(values_, o.values_, [](double x, double y) { return x - y; }));
}

Field2D Field2D::operator*(double a) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= a;
  return Field2D(grid_, std::move(out));
}

Field1D::Field1D(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ParameterError("empty 1D field");
  require_finite(values_);
}

Field1D Field1D::zeros(int n) { return Field1D(std::vector<double>(static_cast<std::size_t>(n), 0.0)); }

Field1D Field1D::operator+(const Field1D& o) const {
  return Field1D(zip(values_, o.values_, [](double x, double y) { return x + y; }));
}

Field1D Field1D::operator-(const Field1D& o) const {
  return Field1D(zip(values_, o.values_, [](double x, double y) { return x - y; }));
}

Field1D Field1D::operator*(double a) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= a;
  return Field1D(std::move(out));
}

}  // namespace ache
