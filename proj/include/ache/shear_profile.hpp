#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ache/field.hpp"
#include "ache/spectral.hpp"

namespace ache {

struct CriticalPoint {
  double x = 0.0;
  int order = 0;
};

struct CriticalPointReport {
  std::vector<CriticalPoint> points;
  int m_max = 0;
  bool degenerate = false;  // some point has order above m_cap
};

/// Shear velocity v(x2) on the unit circle. Built-ins are analytic; tabulated
/// profiles are trigonometric interpolants of their samples.
class ShearProfile {
 public:
  static constexpr int m_cap = 6;

  static ShearProfile zero();
  static ShearProfile sine(double amplitude = 1.0);     // a sin(2 pi x)
  static ShearProfile cosine(double amplitude = 1.0);   // a cos(2 pi x)
  static ShearProfile sine_cubed(double amplitude = 1.0);
  static ShearProfile tabulated(std::vector<double> samples, std::string name = "table");
  static ShearProfile from_file(const std::filesystem::path& path);
  static ShearProfile builtin(const std::string& name, double amplitude);

  const std::string& name() const noexcept { return name_; }
  double amplitude() const noexcept { return amplitude_; }

  double value(double x) const { return derivative(x, 0); }
  double derivative(double x, int order) const;

  Field1D sample(int n) const;

  /// Fourier coefficient v_hat(k) = int_0^1 v(x) e^{-2 pi i k x} dx.
  cplx coefficient(int k) const;

  /// sup |v'| (analytic for built-ins, sampled on 4096 points otherwise).
  double lipschitz_bound() const;
  double sup_norm() const;

  /// True when the profile is exactly zero (built-in zero or all-zero table).
  bool is_zero() const noexcept { return zero_; }

  CriticalPointReport critical_points(double tol = 1e-10) const;

 private:
  ShearProfile() = default;

  std::string name_;
  double amplitude_ = 1.0;
  bool zero_ = false;
  // Sparse Fourier representation: v(x) = sum_k coeff[k] e^{2 pi i k x},
  // stored for k = 0..kmax (negative k by conjugate symmetry).
  std::vector<cplx> coeffs_;
};

}  // namespace ache
