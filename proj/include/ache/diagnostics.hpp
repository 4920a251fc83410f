#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ache/field.hpp"
#include "ache/shear_profile.hpp"
#include "ache/spectral.hpp"

namespace ache {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

/// Scalar functionals of one state. norm_lap_perp is NaN unless the
/// bootstrap monitor asked for it.
struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double energy_par = 0.0;
  double norm_perp = 0.0;       // |c_perp|
  double norm_phi = 0.0;        // |d1 c_perp|
  double norm_psi = 0.0;        // |d2 c_perp|
  double norm_dx2_par = 0.0;    // |d2 c_par|
  double norm_lap_perp = nan_value;
};

/// E[c] = int 1/4 (c^2 - 1)^2 + mu/2 |grad c|^2 on the unit torus.
double energy(const Field2D& c, double mu);
double energy(const Field2D& c, double mu, Spectral2D& ws);
double energy(const Field1D& c, double mu);

/// Owns a transform workspace so repeated evaluations on one grid are cheap.
class DiagnosticsEvaluator {
 public:
  explicit DiagnosticsEvaluator(GridSpec grid);
  DiagnosticsRecord evaluate(const Field2D& c, double t, double mu, bool with_laplacian = false);

 private:
  Spectral2D ws_;
};

/// |dE/dt + nu |grad w|^2 + mu int v' d1c d2c| with w = c^3 - c - mu Lap c,
/// dE/dt by the difference quotient and the rest at the midpoint average
/// field. The shear term is the energy exchange with the flow; it vanishes
/// for v = 0.
double dissipation_residual(const Field2D& a, const Field2D& b, double dt, double mu, double nu,
                            const ShearProfile& profile);

/// Slope of -log|c_perp| from the first e-fold below the initial value to
/// the first value <= 1e-10 (or the end).
double fit_perp_decay(std::span<const double> t, std::span<const double> norm);

struct TheoremVerdict {
  bool holds = true;
  double worst_margin = 0.0;   // min of 20 e^{-lambda t/4} |c_perp(0)| - |c_perp(t)|
  double worst_t = 0.0;
  std::size_t violations = 0;
  std::size_t floored = 0;     // records at or below the roundoff floor
  double fitted_rate = nan_value;
  double rate_ratio = nan_value;   // fitted_rate / (lambda/4)
  std::string fit_error;           // why fitted_rate is NaN, if it is
};

/// Records whose |c_perp| is at or below `floor` are roundoff and cannot
/// violate the bound.
TheoremVerdict theorem_check(std::span<const double> t, std::span<const double> norm_perp, double lambda,
                             double c_perp_0_norm, double floor = 1e-10);

struct ConstantsReport {
  double lambda = 0.0;
  double c_star = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double y0 = 0.0;
  double m0 = 0.0;
  double z0 = 0.0;
  double tau_star = 0.0;
  double b0_empirical = nan_value;   // sup_t |d2 c_par|^2, filled from a run
  double norm_psi0 = 0.0;
  double norm_perp0 = 0.0;
  double norm_phi0 = 0.0;
  double lipschitz_v = 0.0;
  bool smallness_ok = false;
};

ConstantsReport constants(const Field2D& c0, double mu, double nu, double lambda, double c_star,
                          const ShearProfile& profile);
/// Same formulas from precomputed norms.
ConstantsReport constants_from_norms(double norm_psi0, double norm_perp0, double norm_phi0, double lipschitz_v,
                                     double mu, double lambda, double c_star);

struct AssumptionResult {
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t checks = 0;
};

struct BootstrapReport {
  AssumptionResult h1, h2, h3, h4;
  // tau* window: |c_perp(s + tau*)| <= e^{-1} |c_perp(s)|; informational.
  AssumptionResult tau_window;
  double b0_empirical = nan_value;
  bool all_pass() const { return h1.pass && h2.pass && h3.pass && h4.pass; }
};

struct BootstrapOptions {
  double floor = 1e-10;
  bool full_pairs = false;
  std::size_t max_pairs = 10000;
};

BootstrapReport bootstrap_monitor(const std::vector<DiagnosticsRecord>& records, const ConstantsReport& k,
                                  double mu, double nu, const BootstrapOptions& opt = {});

/// "key = value" lines, keys in insertion order.
class KeyValueReport {
 public:
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void add(const ConstantsReport& k, const std::string& prefix = "constants.");
  void add(const TheoremVerdict& v, const std::string& prefix = "theorem.");
  void add(const BootstrapReport& b, const std::string& prefix = "bootstrap.");
  std::string text() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

/// Time series CSV: t, mass, energy, norm_perp_L2, norm_phi_L2, norm_psi_L2,
/// norm_dx2_cpar_L2, energy_par, and norm_lap_perp_L2 when present.
void write_series_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRecord>& records);

}  // namespace ache
