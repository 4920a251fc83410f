#pragma once

#include <string_view>

#include "ache/field.hpp"
#include "ache/spectral.hpp"

namespace ache {

/// Streamwise-average split f = lift(parallel) + perp.
struct DecompositionPair {
  Field1D parallel;  // row means, a function of x2
  Field2D perp;      // zero mean along every x1 row
};

double average(const Field2D& f);
double average(const Field1D& f);

DecompositionPair decompose(const Field2D& f);

/// Extends a function of x2 to the 2D grid, constant along x1.
Field2D lift(const Field1D& parallel, GridSpec grid);

/// L2 inner product on the unit torus (grid mean of f*g).
double inner(const Field2D& f, const Field2D& g);

// Grid-quadrature norms on the unit torus.
double l2_norm(const Field2D& f);
double l4_norm(const Field2D& f);
double l6_norm(const Field2D& f);
double linf_norm(const Field2D& f);
double h1_seminorm(const Field2D& f);
double h1_seminorm(const Field2D& f, Spectral2D& ws);
double laplacian_norm(const Field2D& f, Spectral2D& ws);

double l2_norm(const Field1D& f);
double linf_norm(const Field1D& f);
double h1_seminorm(const Field1D& f);

/// Gagliardo-Nirenberg inequalities whose empirical constants gn_ratio reports.
enum class GnInequality {
  linf_1d,       // |f|_inf <= C |f'|^1/2 |f|^1/2            (on T)
  l4_grad_2d,    // |f|_4   <= C |grad f|^1/2 |f|^1/2        (on T^2)
  l4_lap_2d,     // |f|_4   <= C |lap f|^1/4 |f|^3/4
  l6_grad_2d,    // |f|_6   <= C |grad f|^2/3 |f|^1/3
  linf_lap_2d,   // |f|_inf <= C |lap f|^1/2 |f|^1/2
};

GnInequality parse_gn_inequality(std::string_view name);

/// Left side over the right side's norm product. Requires a mean-zero,
/// nonzero field.
double gn_ratio(const Field1D& f, GnInequality id);
double gn_ratio(const Field2D& f, GnInequality id);

}  // namespace ache
