#include "ache/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "ache/error.hpp"

namespace ache {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// The FFTW planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int wrap(int k, int n) {
  int m = ((k + n / 2) % n + n) % n;
  return m - n / 2;
}

// (2 pi i k)^p
cplx derivative_symbol(int k, int p) {
  static constexpr cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return ipow[p % 4] * std::pow(kTwoPi * k, p);
}

}  // namespace

namespace detail {

class FftPlan2D {
 public:
  explicit FftPlan2D(GridSpec g) : grid_(g), half_(static_cast<std::size_t>(g.ny) * (g.nx / 2 + 1)) {
    real_ = fftw_alloc_real(g.size());
    spec_ = fftw_alloc_complex(half_);
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(g.ny, g.nx, real_, spec_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_2d(g.ny, g.nx, spec_, real_, FFTW_ESTIMATE);
  }
  ~FftPlan2D() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(inv_);
    }
    fftw_free(real_);
    fftw_free(spec_);
  }
  FftPlan2D(const FftPlan2D&) = delete;
  FftPlan2D& operator=(const FftPlan2D&) = delete;

  void forward(std::span<const double> in, std::span<cplx> out) {
    std::memcpy(real_, in.data(), grid_.size() * sizeof(double));
    fftw_execute(fwd_);
    const double scale = 1.0 / static_cast<double>(grid_.size());
    const auto* src = reinterpret_cast<const cplx*>(spec_);
    for (std::size_t i = 0; i < half_; ++i) out[i] = src[i] * scale;
  }

  void inverse(std::span<const cplx> in, std::span<double> out) {
    std::memcpy(spec_, in.data(), half_ * sizeof(cplx));
    fftw_execute(inv_);
    std::memcpy(out.data(), real_, grid_.size() * sizeof(double));
  }

 private:
  GridSpec grid_;
  std::size_t half_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

class FftPlan1D {
 public:
  explicit FftPlan1D(int n) : n_(n) {
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~FftPlan1D() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(inv_);
    }
    fftw_free(real_);
    fftw_free(spec_);
  }
  FftPlan1D(const FftPlan1D&) = delete;
  FftPlan1D& operator=(const FftPlan1D&) = delete;

  void forward(std::span<const double> in, std::span<cplx> out) {
    std::memcpy(real_, in.data(), n_ * sizeof(double));
    fftw_execute(fwd_);
    const auto* src = reinterpret_cast<const cplx*>(spec_);
    for (int k = 0; k <= n_ / 2; ++k) out[k] = src[k] / static_cast<double>(n_);
  }

  void inverse(std::span<const cplx> in, std::span<double> out) {
    std::memcpy(spec_, in.data(), (n_ / 2 + 1) * sizeof(cplx));
    fftw_execute(inv_);
    std::memcpy(out.data(), real_, n_ * sizeof(double));
  }

 private:
  int n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectrum containers

Spectrum2D::Spectrum2D(GridSpec grid)
    : grid_(grid), coeffs_(static_cast<std::size_t>(grid.ny) * (grid.nx / 2 + 1)) {}

cplx Spectrum2D::at(int k1, int k2) const noexcept {
  k1 = wrap(k1, grid_.nx);
  k2 = wrap(k2, grid_.ny);
  if (k1 == -grid_.nx / 2) return (*this)(row_of(k2), grid_.nx / 2);
  if (k1 >= 0) return (*this)(row_of(k2), k1);
  return std::conj((*this)(row_of(wrap(-k2, grid_.ny)), -k1));
}

void Spectrum2D::symmetrize() noexcept {
  for (const int col : {0, cols() - 1})
    for (int r = 0; r < rows(); ++r) {
      const int m = row_of(-k2(r)) % rows();
      if (m < r) continue;
      const cplx avg = 0.5 * ((*this)(r, col) + std::conj((*this)(m, col)));
      (*this)(r, col) = avg;
      (*this)(m, col) = std::conj(avg);
    }
}

Spectrum1D::Spectrum1D(int n) : n_(n), coeffs_(static_cast<std::size_t>(n / 2 + 1)) {}

cplx Spectrum1D::at(int k) const noexcept {
  k = wrap(k, n_);
  if (k == -n_ / 2) return coeffs_[n_ / 2];
  return k >= 0 ? coeffs_[k] : std::conj(coeffs_[-k]);
}

// ---------------------------------------------------------------------------
// 2D workspace

Spectral2D::Spectral2D(GridSpec grid)
    : grid_(grid),
      fine_(2 * grid.nx, 2 * grid.ny),
      fft_(std::make_unique<detail::FftPlan2D>(grid)) {}

Spectral2D::~Spectral2D() = default;
Spectral2D::Spectral2D(Spectral2D&&) noexcept = default;
Spectral2D& Spectral2D::operator=(Spectral2D&&) noexcept = default;

Spectrum2D Spectral2D::forward(const Field2D& f) {
  if (!(f.grid() == grid_)) throw ParameterError("field grid does not match workspace");
  Spectrum2D s(grid_);
  forward(f.values(), s);
  return s;
}

Field2D Spectral2D::inverse(const Spectrum2D& s) {
  std::vector<double> v(grid_.size());
  inverse(s, v);
  return Field2D(grid_, std::move(v));
}

void Spectral2D::forward(std::span<const double> values, Spectrum2D& out) {
  fft_->forward(values, out.data());
}

void Spectral2D::inverse(const Spectrum2D& s, std::span<double> out) {
  fft_->inverse(s.data(), out);
}

double Spectral2D::laplacian_symbol(int row, int col) const noexcept {
  const int k2 = row < grid_.ny / 2 ? row : row - grid_.ny;
  return -kTwoPi * kTwoPi * (static_cast<double>(col) * col + static_cast<double>(k2) * k2);
}

void Spectral2D::apply_derivative(Spectrum2D& s, Axis axis, int order) const {
  if (order < 1) throw ParameterError("derivative order must be >= 1");
  const bool odd = order % 2 == 1;
  if (axis == Axis::x1) {
    for (int c = 0; c < s.cols(); ++c) {
      const cplx factor = (odd && c == grid_.nx / 2) ? cplx{0.0} : derivative_symbol(c, order);
      for (int r = 0; r < s.rows(); ++r) s(r, c) *= factor;
    }
  } else {
    for (int r = 0; r < s.rows(); ++r) {
      const int k2 = s.k2(r);
      const cplx factor = (odd && k2 == -grid_.ny / 2) ? cplx{0.0} : derivative_symbol(k2, order);
      for (int c = 0; c < s.cols(); ++c) s(r, c) *= factor;
    }
  }
}

void Spectral2D::apply_laplacian(Spectrum2D& s) const {
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c) s(r, c) *= laplacian_symbol(r, c);
}

Field2D Spectral2D::derivative(const Field2D& f, Axis axis, int order) {
  if (order < 1) throw ParameterError("derivative order must be >= 1");
  Spectrum2D s = forward(f);
  apply_derivative(s, axis, order);
  return inverse(s);
}

Field2D Spectral2D::laplacian(const Field2D& f) {
  Spectrum2D s = forward(f);
  apply_laplacian(s);
  return inverse(s);
}

Field2D Spectral2D::bilaplacian(const Field2D& f) {
  Spectrum2D s = forward(f);
  apply_laplacian(s);
  apply_laplacian(s);
  return inverse(s);
}

void Spectral2D::dealiased_cube(const Spectrum2D& in, Spectrum2D& out) {
  if (!fine_fft_) {
    fine_fft_ = std::make_unique<detail::FftPlan2D>(fine_);
    fine_values_.resize(fine_.size());
    fine_spec_ = std::make_unique<Spectrum2D>(fine_);
  }
  Spectrum2D& fine = *fine_spec_;
  std::fill(fine.data().begin(), fine.data().end(), cplx{0.0});

  const int nyq1 = grid_.nx / 2;
  const int nyq2 = -grid_.ny / 2;
  // Nyquist lines are split evenly between +n/2 and -n/2 so the padded
  // spectrum stays Hermitian.
  for (int r = 0; r < in.rows(); ++r) {
    const int k2 = in.k2(r);
    for (int c = 0; c < in.cols(); ++c) {
      double w = 1.0;
      if (c == nyq1) w *= 0.5;
      if (k2 == nyq2) w *= 0.5;
      const cplx v = in(r, c) * w;
      fine(fine.row_of(k2), c) += v;
      if (k2 == nyq2) fine(fine.row_of(-k2), c) += v;
    }
  }

  fine_fft_->inverse(fine.data(), fine_values_);
  for (double& x : fine_values_) x = x * x * x;
  fine_fft_->forward(fine_values_, fine.data());

  // Truncate to |k| <= n/2 and sample on the coarse grid: the +-n/2 pair
  // folds onto the coarse Nyquist line.
  for (int r = 0; r < out.rows(); ++r) {
    const int k2 = out.k2(r);
    for (int c = 0; c < out.cols(); ++c) {
      cplx sum = 0.0;
      const int k1s[2] = {c, -c};
      const int k2s[2] = {k2, -k2};
      const int n1 = (c == nyq1) ? 2 : 1;
      const int n2 = (k2 == nyq2) ? 2 : 1;
      for (int a = 0; a < n1; ++a)
        for (int b = 0; b < n2; ++b) sum += fine.at(k1s[a], k2s[b]);
      out(r, c) = sum;
    }
  }
}

Field2D Spectral2D::dealiased_cube(const Field2D& f) {
  Spectrum2D s = forward(f);
  Spectrum2D cube(grid_);
  dealiased_cube(s, cube);
  return inverse(cube);
}

// ---------------------------------------------------------------------------
// 1D workspace

Spectral1D::Spectral1D(int n) : n_(n) {
  require_grid_extent(n, "n");
  fft_ = std::make_unique<detail::FftPlan1D>(n);
}

Spectral1D::~Spectral1D() = default;
Spectral1D::Spectral1D(Spectral1D&&) noexcept = default;
Spectral1D& Spectral1D::operator=(Spectral1D&&) noexcept = default;

Spectrum1D Spectral1D::forward(const Field1D& f) {
  if (f.n() != n_) throw ParameterError("field size does not match workspace");
  Spectrum1D s(n_);
  forward(f.values(), s);
  return s;
}

Field1D Spectral1D::inverse(const Spectrum1D& s) {
  std::vector<double> v(static_cast<std::size_t>(n_));
  inverse(s, v);
  return Field1D(std::move(v));
}

void Spectral1D::forward(std::span<const double> values, Spectrum1D& out) {
  fft_->forward(values, out.data());
}

void Spectral1D::inverse(const Spectrum1D& s, std::span<double> out) {
  fft_->inverse(s.data(), out);
}

double Spectral1D::laplacian_symbol(int k) const noexcept {
  return -kTwoPi * kTwoPi * static_cast<double>(k) * k;
}

void Spectral1D::apply_derivative(Spectrum1D& s, int order) const {
  if (order < 1) throw ParameterError("derivative order must be >= 1");
  for (int k = 0; k < s.size(); ++k)
    s[k] *= (order % 2 == 1 && k == n_ / 2) ? cplx{0.0} : derivative_symbol(k, order);
}

Field1D Spectral1D::derivative(const Field1D& f, int order) {
  if (order < 1) throw ParameterError("derivative order must be >= 1");
  Spectrum1D s = forward(f);
  apply_derivative(s, order);
  return inverse(s);
}

void Spectral1D::dealiased_cube(const Spectrum1D& in, Spectrum1D& out) {
  const int fine_n = 2 * n_;
  if (!fine_fft_) {
    fine_fft_ = std::make_unique<detail::FftPlan1D>(fine_n);
    fine_values_.resize(static_cast<std::size_t>(fine_n));
    fine_spec_ = std::make_unique<Spectrum1D>(fine_n);
  }
  Spectrum1D& fine = *fine_spec_;
  std::fill(fine.data().begin(), fine.data().end(), cplx{0.0});
  for (int k = 0; k < in.size(); ++k) fine[k] = (k == n_ / 2) ? 0.5 * in[k] : in[k];

  fine_fft_->inverse(fine.data(), fine_values_);
  for (double& x : fine_values_) x = x * x * x;
  fine_fft_->forward(fine_values_, fine.data());

  for (int k = 0; k < out.size(); ++k)
    out[k] = (k == n_ / 2) ? fine.at(k) + fine.at(-k) : fine[k];
}

Field1D Spectral1D::dealiased_cube(const Field1D& f) {
  Spectrum1D s = forward(f);
  Spectrum1D cube(n_);
  dealiased_cube(s, cube);
  return inverse(cube);
}

// ---------------------------------------------------------------------------
// Free-function conveniences

Spectrum2D forward(const Field2D& f) { return Spectral2D(f.grid()).forward(f); }
Field2D inverse(const Spectrum2D& s) { return Spectral2D(s.grid()).inverse(s); }
Field2D derivative(const Field2D& f, Axis axis, int order) {
  return Spectral2D(f.grid()).derivative(f, axis, order);
}
Field2D laplacian(const Field2D& f) { return Spectral2D(f.grid()).laplacian(f); }
Field2D bilaplacian(const Field2D& f) { return Spectral2D(f.grid()).bilaplacian(f); }
Field2D dealiased_cube(const Field2D& f) { return Spectral2D(f.grid()).dealiased_cube(f); }

Spectrum1D forward(const Field1D& f) { return Spectral1D(f.n()).forward(f); }
Field1D inverse(const Spectrum1D& s) { return Spectral1D(s.n()).inverse(s); }
Field1D derivative(const Field1D& f, int order) { return Spectral1D(f.n()).derivative(f, order); }
Field1D dealiased_cube(const Field1D& f) { return Spectral1D(f.n()).dealiased_cube(f); }

}  // namespace ache
