#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "ache/field.hpp"
#include "ache/grid.hpp"

namespace ache {

using cplx = std::complex<double>;

enum class Axis { x1, x2 };

/// Fourier coefficients of a real field in half-complex layout: rows hold
/// k2 in FFT order, columns hold k1 = 0..nx/2. Column nx/2 is the Nyquist
/// column (k1 = -nx/2 on the torus). Coefficients are normalized so that the
/// (0,0) entry is the spatial average.
class Spectrum2D {
 public:
  explicit Spectrum2D(GridSpec grid);

  const GridSpec& grid() const noexcept { return grid_; }
  int rows() const noexcept { return grid_.ny; }
  int cols() const noexcept { return grid_.nx / 2 + 1; }

  cplx& operator()(int row, int col) noexcept { return coeffs_[row * cols() + col]; }
  const cplx& operator()(int row, int col) const noexcept { return coeffs_[row * cols() + col]; }

  /// Signed wavenumber of a row, in [-ny/2, ny/2).
  int k2(int row) const noexcept { return row < grid_.ny / 2 ? row : row - grid_.ny; }
  int row_of(int k2) const noexcept { return k2 >= 0 ? k2 : k2 + grid_.ny; }

  /// Coefficient for signed wavenumbers (k1, k2), using conjugate symmetry.
  /// Indices wrap periodically.
  cplx at(int k1, int k2) const noexcept;

  std::span<cplx> data() noexcept { return coeffs_; }
  std::span<const cplx> data() const noexcept { return coeffs_; }

  /// Projects onto spectra of real fields: columns k1 = 0 and nx/2 are made
  /// conjugate-symmetric in k2. The inverse transform drops the other part
  /// silently, so a solver that never sees it must remove it.
  void symmetrize() noexcept;

 private:
  GridSpec grid_;
  std::vector<cplx> coeffs_;
};

/// Half-complex coefficients of a real 1D field: k = 0..n/2.
class Spectrum1D {
 public:
  explicit Spectrum1D(int n);

  int n() const noexcept { return n_; }
  int size() const noexcept { return n_ / 2 + 1; }
  cplx& operator[](int k) noexcept { return coeffs_[k]; }
  const cplx& operator[](int k) const noexcept { return coeffs_[k]; }
  cplx at(int k) const noexcept;

  std::span<cplx> data() noexcept { return coeffs_; }
  std::span<const cplx> data() const noexcept { return coeffs_; }

 private:
  int n_;
  std::vector<cplx> coeffs_;
};

namespace detail {
class FftPlan2D;
class FftPlan1D;
}  // namespace detail

/// Transform workspace for one grid. Owns its FFT plans and buffers, so one
/// instance must not be used from two threads at once; distinct instances are
/// independent.
class Spectral2D {
 public:
  explicit Spectral2D(GridSpec grid);
  ~Spectral2D();
  Spectral2D(Spectral2D&&) noexcept;
  Spectral2D& operator=(Spectral2D&&) noexcept;

  const GridSpec& grid() const noexcept { return grid_; }

  Spectrum2D forward(const Field2D& f);
  Field2D inverse(const Spectrum2D& s);

  /// Unchecked hot-path transforms.
  void forward(std::span<const double> values, Spectrum2D& out);
  void inverse(const Spectrum2D& s, std::span<double> out);

  /// Multiplies by (2 pi i k)^order along the axis; odd orders zero the
  /// Nyquist line of that axis.
  void apply_derivative(Spectrum2D& s, Axis axis, int order) const;
  void apply_laplacian(Spectrum2D& s) const;

  Field2D derivative(const Field2D& f, Axis axis, int order);
  Field2D laplacian(const Field2D& f);
  Field2D bilaplacian(const Field2D& f);

  /// Alias-free spectral truncation of c^3 via 2x zero padding per axis.
  void dealiased_cube(const Spectrum2D& in, Spectrum2D& out);
  Field2D dealiased_cube(const Field2D& f);

  /// -4 pi^2 (k1^2 + k2^2) at a half-complex position.
  double laplacian_symbol(int row, int col) const noexcept;

 private:
  GridSpec grid_;
  GridSpec fine_;
  std::unique_ptr<detail::FftPlan2D> fft_;
  std::unique_ptr<detail::FftPlan2D> fine_fft_;
  std::vector<double> fine_values_;
  std::unique_ptr<Spectrum2D> fine_spec_;
};

class Spectral1D {
 public:
  explicit Spectral1D(int n);
  ~Spectral1D();
  Spectral1D(Spectral1D&&) noexcept;
  Spectral1D& operator=(Spectral1D&&) noexcept;

  int n() const noexcept { return n_; }

  Spectrum1D forward(const Field1D& f);
  Field1D inverse(const Spectrum1D& s);
  void forward(std::span<const double> values, Spectrum1D& out);
  void inverse(const Spectrum1D& s, std::span<double> out);

  void apply_derivative(Spectrum1D& s, int order) const;
  Field1D derivative(const Field1D& f, int order);
  void dealiased_cube(const Spectrum1D& in, Spectrum1D& out);
  Field1D dealiased_cube(const Field1D& f);

  double laplacian_symbol(int k) const noexcept;

 private:
  int n_;
  std::unique_ptr<detail::FftPlan1D> fft_;
  std::unique_ptr<detail::FftPlan1D> fine_fft_;
  std::vector<double> fine_values_;
  std::unique_ptr<Spectrum1D> fine_spec_;
};

// Convenience wrappers; each call builds a temporary workspace.
Spectrum2D forward(const Field2D& f);
Field2D inverse(const Spectrum2D& s);
Field2D derivative(const Field2D& f, Axis axis, int order);
Field2D laplacian(const Field2D& f);
Field2D bilaplacian(const Field2D& f);
Field2D dealiased_cube(const Field2D& f);

Spectrum1D forward(const Field1D& f);
Field1D inverse(const Spectrum1D& s);
Field1D derivative(const Field1D& f, int order);
Field1D dealiased_cube(const Field1D& f);

}  // namespace ache
