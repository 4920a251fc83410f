#include "ache/field_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ache/error.hpp"

namespace ache {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double mean_power(std::span<const double> v, int p) {
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return s / static_cast<double>(v.size());
}

void require_mean_zero(std::span<const double> v) {
  double sup = 0.0;
  for (double x : v) sup = std::max(sup, std::abs(x));
  if (sup == 0.0) throw ParameterError("degenerate ratio: zero field");
  if (std::abs(mean_of(v)) > 1e-12 * sup) throw ParameterError("gn_ratio requires a mean-zero field");
}

}  // namespace

double average(const Field2D& f) { return mean_of(f.values()); }
double average(const Field1D& f) { return mean_of(f.values()); }

DecompositionPair decompose(const Field2D& f) {
  const GridSpec& g = f.grid();
  std::vector<double> par(static_cast<std::size_t>(g.ny));
  std::vector<double> perp(g.size());
  for (int j = 0; j < g.ny; ++j) {
    // Offsets from the first sample, so rows constant in x1 average exactly.
    const double base = f(0, j);
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i) s += f(i, j) - base;
    par[j] = base + s / g.nx;
    for (int i = 0; i < g.nx; ++i) perp[g.index(i, j)] = f(i, j) - par[j];
  }
  return {Field1D(std::move(par)), Field2D(g, std::move(perp))};
}

Field2D lift(const Field1D& parallel, GridSpec grid) {
  if (parallel.n() != grid.ny) throw ParameterError("parallel part size does not match ny");
  std::vector<double> v(grid.size());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) v[grid.index(i, j)] = parallel[j];
  return Field2D(grid, std::move(v));
}

double inner(const Field2D& f, const Field2D& g) {
  if (!(f.grid() == g.grid())) throw ParameterError("field grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.values()[i] * g.values()[i];
  return s / static_cast<double>(f.size());
}

double l2_norm(const Field2D& f) { return std::sqrt(mean_power(f.values(), 2)); }
double l4_norm(const Field2D& f) { return std::pow(mean_power(f.values(), 4), 0.25); }
double l6_norm(const Field2D& f) { return std::pow(mean_power(f.values(), 6), 1.0 / 6.0); }

double linf_norm(const Field2D& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::abs(x));
  return m;
}

double h1_seminorm(const Field2D& f, Spectral2D& ws) {
  const double a = l2_norm(ws.derivative(f, Axis::x1, 1));
  const double b = l2_norm(ws.derivative(f, Axis::x2, 1));
  return std::sqrt(a * a + b * b);
}

double h1_seminorm(const Field2D& f) {
  Spectral2D ws(f.grid());
  return h1_seminorm(f, ws);
}

double laplacian_norm(const Field2D& f, Spectral2D& ws) { return l2_norm(ws.laplacian(f)); }

double l2_norm(const Field1D& f) { return std::sqrt(mean_power(f.values(), 2)); }

double linf_norm(const Field1D& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::abs(x));
  return m;
}

double h1_seminorm(const Field1D& f) { return l2_norm(derivative(f, 1)); }

GnInequality parse_gn_inequality(std::string_view name) {
  if (name == "linf_1d") return GnInequality::linf_1d;
  if (name == "l4_grad_2d") return GnInequality::l4_grad_2d;
  if (name == "l4_lap_2d") return GnInequality::l4_lap_2d;
  if (name == "l6_grad_2d") return GnInequality::l6_grad_2d;
  if (name == "linf_lap_2d") return GnInequality::linf_lap_2d;
  throw ParameterError("unknown inequality id '" + std::string(name) + "'");
}

double gn_ratio(const Field1D& f, GnInequality id) {
  if (id != GnInequality::linf_1d) throw ParameterError("inequality is two-dimensional");
  require_mean_zero(f.values());
  return linf_norm(f) / std::sqrt(h1_seminorm(f) * l2_norm(f));
}

double gn_ratio(const Field2D& f, GnInequality id) {
  require_mean_zero(f.values());
  Spectral2D ws(f.grid());
  const double l2 = l2_norm(f);
  switch (id) {
    case GnInequality::l4_grad_2d:
      return l4_norm(f) / (std::sqrt(h1_seminorm(f, ws)) * std::sqrt(l2));
    case GnInequality::l4_lap_2d:
      return l4_norm(f) / (std::pow(laplacian_norm(f, ws), 0.25) * std::pow(l2, 0.75));
    case GnInequality::l6_grad_2d:
      return l6_norm(f) / (std::pow(h1_seminorm(f, ws), 2.0 / 3.0) * std::cbrt(l2));
    case GnInequality::linf_lap_2d:
      return linf_norm(f) / (std::sqrt(laplacian_norm(f, ws)) * std::sqrt(l2));
    case GnInequality::linf_1d:
      break;
  }
  throw ParameterError("inequality is one-dimensional");
}

}  // namespace ache
