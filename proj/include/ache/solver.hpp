#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "ache/diagnostics.hpp"
#include "ache/field.hpp"
#include "ache/shear_profile.hpp"
#include "ache/spectral.hpp"

namespace ache {

struct SolverConfig {
  double mu = 1e-2;
  double nu = 1e-2;
  GridSpec grid{128, 128};
  double dt = 2e-3;
  double t_end = 400.0;
  double stabilization = 2.0;
  long snapshot_stride = 50000;
  long series_stride = 50;
  bool pin_mean = true;
  // Linear test mode: drops c^3 and integrates the whole linear symbol
  // exactly (advection stays explicit).
  bool disable_cube = false;
};

/// 0.5 min(1/nx, 1/ny) / max(1, |v|_inf)
double dt_cfl(const SolverConfig& config, const ShearProfile& profile);

/// Throws ParameterError on mu <= 0, nu < 0, dt <= 0, t_end < 0, s < 0,
/// nonpositive strides or dt above dt_cfl. nu = 0 is the transport limit.
void validate(const SolverConfig& config, const ShearProfile& profile);

struct SimState {
  double time = 0.0;
  Field2D field;
  long step_index = 0;
};

/// ETDRK2 (Cox-Matthews) stepper for
///   c_t + v(x2) c_x1 + mu nu Lap^2 c = nu Lap (c^3 - c)
/// with L = -mu nu Lap^2 + s nu Lap treated exactly and
/// N = nu Lap (c^3 - c) - s nu Lap c - v c_x1 explicit.
class Stepper2D {
 public:
  Stepper2D(const SolverConfig& config, const ShearProfile& profile, const Field2D& initial, double h);
  ~Stepper2D();

  void step();

  double time() const noexcept { return time_; }
  long step_index() const noexcept { return steps_; }
  double h() const noexcept { return h_; }
  /// |mean before pinning - target| of the last step.
  double last_drift() const noexcept { return last_drift_; }
  SimState state();
  const Spectrum2D& spectrum() const noexcept { return *c_; }

 private:
  void nonlinear(const Spectrum2D& c, Spectrum2D& out);

  SolverConfig config_;
  double h_;
  double time_ = 0.0;
  long steps_ = 0;
  double mean_target_;
  double last_drift_ = 0.0;
  Spectral2D ws_;
  std::vector<double> v_;   // profile at the x2 nodes
  std::vector<double> lap_, e_, hphi1_, hphi2_;
  std::unique_ptr<Spectrum2D> c_, a_, nc_, na_, tmp_;
  std::vector<double> phys_;
};

/// One step of size config.dt.
SimState step(const SimState& state, const SolverConfig& config, const ShearProfile& profile);

struct RunOptions {
  std::filesystem::path snapshot_dir;   // empty: no snapshots
  bool record_laplacian = false;        // adds |Lap c_perp| to records
  bool keep_fields = false;             // store the field at every record
  std::function<void(const SimState&)> on_record;
};

struct RunResult {
  SimState final;
  std::vector<DiagnosticsRecord> records;
  std::vector<Field2D> fields;            // when keep_fields
  double max_drift = 0.0;                 // largest pre-pin mean drift over all steps
  std::vector<std::filesystem::path> snapshots;
};

/// Steps to t_end with h = t_end / ceil(t_end / dt). Records at step 0, every
/// series_stride steps and at the end; snapshots likewise every
/// snapshot_stride steps. Throws NumericalError on blow-up, naming the last
/// finite snapshot.
RunResult run(const SolverConfig& config, const Field2D& initial, const ShearProfile& profile,
              const RunOptions& options = {});

/// One-dimensional Cahn-Hilliard equation in x2 on config.grid.ny points,
/// same scheme, stabilization and pinning.
class Stepper1D {
 public:
  Stepper1D(const SolverConfig& config, const Field1D& initial, double h);
  ~Stepper1D();
  void step();
  double time() const noexcept { return time_; }
  double last_drift() const noexcept { return last_drift_; }
  Field1D state();

 private:
  void nonlinear(const Spectrum1D& c, Spectrum1D& out);

  SolverConfig config_;
  double h_;
  double time_ = 0.0;
  double mean_target_;
  double last_drift_ = 0.0;
  Spectral1D ws_;
  std::vector<double> lap_, e_, hphi1_, hphi2_;
  std::unique_ptr<Spectrum1D> c_, a_, nc_, na_;
};

struct Trajectory1D {
  std::vector<double> t;
  std::vector<double> energy;
  std::vector<double> mass;
  Field1D final;
  double max_drift = 0.0;
};

Trajectory1D solve_1d(const SolverConfig& config, const Field1D& initial);

struct ConvergenceReport {
  std::vector<double> dts;
  std::vector<double> errors;   // L2 distance to the reference solution
  double order = nan_value;
  bool exact = false;           // errors at roundoff: the scheme is exact here
};

/// Runs `levels` step sizes dt, dt/2, ... to config.t_end against a reference
/// at (finest dt)/2 and fits the slope of log error against log dt.
ConvergenceReport convergence_order(const SolverConfig& config, const ShearProfile& profile,
                                    const Field2D& initial, int levels = 4);

/// Largest nodal error of a run on an n x n grid against one on a reference
/// grid, compared at the coarse nodes.
double spatial_error(const SolverConfig& config, const ShearProfile& profile,
                     const std::function<double(double, double)>& initial, int n, int n_ref);

}  // namespace ache
