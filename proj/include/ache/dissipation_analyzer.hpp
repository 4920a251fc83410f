#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ache/shear_profile.hpp"

namespace ache {

/// H_nu = mu nu Lap^2 + v(x2) d/dx1 restricted to one streamwise wavenumber
/// k1, in the x2-Fourier basis k2 = -M/2 .. M/2-1 (row r holds k2 = r - M/2).
struct OperatorBlock {
  int k1 = 0;
  int M = 0;
  double mu_nu = 0.0;
  Eigen::MatrixXcd matrix;

  int k2(int r) const noexcept { return r - M / 2; }
};

OperatorBlock build_block(const ShearProfile& profile, int k1, double mu_nu, int M);

/// Blocks for k1 = 1..K. Negative k1 give complex-conjugate blocks with the
/// same norms, so they are not built.
std::vector<OperatorBlock> build_blocks(const ShearProfile& profile, int K, double mu_nu, int M);

/// Operator 2-norm of exp(-t H).
double semigroup_norm(const OperatorBlock& block, double t);
double sup_semigroup_norm(const std::vector<OperatorBlock>& blocks, double t);

struct DecayCurve {
  std::vector<double> times;
  std::vector<int> k1;                            // one entry per block
  std::vector<std::vector<double>> block_norms;   // [block][time]
  std::vector<double> sup_norms;                  // [time]
};

/// Uniform grid from t = 0 past the point where the sup-norm reaches 1e-10
/// (or t_max), with about 128 steps after its first e-fold.
DecayCurve decay_curve(const std::vector<OperatorBlock>& blocks, double t_max = 1e4);
DecayCurve sample_curve(const std::vector<OperatorBlock>& blocks, std::vector<double> times);

/// Least-squares slope of -log(norm) against t on the window from the first
/// value <= 1/e to the first value <= 1e-10 (or the end).
double fit_rate(std::span<const double> times, std::span<const double> norms);
double fit_rate(const DecayCurve& curve);

/// Smallest t with sup-norm <= fraction.
double dissipation_time(const std::vector<OperatorBlock>& blocks, double fraction = 0.5,
                        double t_max = 1e4);

struct RateFit {
  std::vector<double> nu_grid;
  std::vector<double> lambda;   // per nu
  double mu = 1.0;
  double delta0 = 0.0;
  double exponent = 0.0;
  int m = 0;                    // m_max of the profile; 0 for the zero profile
  double exponent_predicted = 0.0;  // 2m/(2m+1); 1 without shear; NaN if degenerate
  std::vector<DecayCurve> curves;   // per nu
};

struct ScalingOptions {
  int K = 8;
  int M = 128;
  double t_max = 1e4;
  int threads = 1;
};

/// Least squares of log lambda = log delta0 + exponent log nu.
struct PowerLaw {
  double exponent = 0.0;
  double delta0 = 0.0;
};
PowerLaw fit_power_law(std::span<const double> nu, std::span<const double> lambda);

/// Fitted decay rate of the sup semigroup norm at one value of mu nu.
double measure_rate(const ShearProfile& profile, double mu_nu, const ScalingOptions& opt = {});

RateFit scaling_fit(const ShearProfile& profile, const std::vector<double>& nu_grid, double mu,
                    const ScalingOptions& opt = {});

struct BoundReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;   // min of prefactor e^{-lambda t} - |e^{-tH} g|
  double worst_t = 0.0;
  int worst_k1 = 0;
};

/// Checks |exp(-tH) g| <= prefactor e^{-lambda t} for seeded random unit g
/// and `times` uniformly spaced points on [0, ln(prefactor/1e-10)/lambda].
/// Excesses below 1e-12 relative to the bound are treated as roundoff.
BoundReport verify_semigroup_bound(const std::vector<OperatorBlock>& blocks, double lambda,
                                   double prefactor = 5.0, int trials = 100, int times = 50,
                                   std::uint64_t seed = 1);

void write_curves_csv(const std::filesystem::path& path, const RateFit& fit);
void write_summary_csv(const std::filesystem::path& path, const RateFit& fit);

}  // namespace ache
