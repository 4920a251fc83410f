#include "ache/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "ache/error.hpp"
#include "ache/field_algebra.hpp"
#include "ache/snapshot.hpp"

namespace ache {

namespace {

// phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2
double phi1(double z) {
  if (std::abs(z) < 1e-4) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
  return std::expm1(z) / z;
}

double phi2(double z) {
  if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
  return (std::expm1(z) - z) / (z * z);
}

double linear_symbol(const SolverConfig& c, double lap) {
  if (c.disable_cube) return -c.mu * c.nu * lap * lap - c.nu * lap;
  return -c.mu * c.nu * lap * lap + c.stabilization * c.nu * lap;
}

void fill_exponentials(const SolverConfig& c, double h, const std::vector<double>& lap, std::vector<double>& e,
                       std::vector<double>& hphi1, std::vector<double>& hphi2) {
  e.resize(lap.size());
  hphi1.resize(lap.size());
  hphi2.resize(lap.size());
  for (std::size_t m = 0; m < lap.size(); ++m) {
    const double z = h * linear_symbol(c, lap[m]);
    e[m] = std::exp(z);
    hphi1[m] = h * phi1(z);
    hphi2[m] = h * phi2(z);
  }
}

bool all_finite(std::span<const cplx> s) {
  return std::all_of(s.begin(), s.end(), [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

long step_count(double t_end, double dt) {
  if (t_end <= 0.0) return 0;
  return static_cast<long>(std::ceil(t_end / dt - 1e-9));
}

}  // namespace

double dt_cfl(const SolverConfig& config, const ShearProfile& profile) {
  const double h = std::min(1.0 / config.grid.nx, 1.0 / config.grid.ny);
  return 0.5 * h / std::max(1.0, profile.sup_norm());
}

void validate(const SolverConfig& c, const ShearProfile& profile) {
  if (!(c.mu > 0) || !std::isfinite(c.mu)) throw ParameterError("mu must be > 0");
  if (!(c.nu >= 0) || !std::isfinite(c.nu)) throw ParameterError("nu must be >= 0");
  if (!(c.dt > 0) || !std::isfinite(c.dt)) throw ParameterError("dt must be > 0");
  if (!(c.t_end >= 0) || !std::isfinite(c.t_end)) throw ParameterError("t_end must be >= 0");
  if (!(c.stabilization >= 0)) throw ParameterError("stabilization must be >= 0");
  if (c.series_stride < 1 || c.snapshot_stride < 1) throw ParameterError("strides must be >= 1");
  const double cfl = dt_cfl(c, profile);
  if (c.dt > cfl * (1 + 1e-12))
    throw ParameterError(fmt::format("dt = {} exceeds the advective limit {}", c.dt, cfl));
}

// ---------------------------------------------------------------------------

Stepper2D::Stepper2D(const SolverConfig& config, const ShearProfile& profile, const Field2D& initial, double h)
    : config_(config), h_(h), ws_(config.grid) {
  if (!(initial.grid() == config.grid)) throw ParameterError("initial field grid does not match the solver grid");
  if (!(h > 0)) throw ParameterError("step size must be > 0");
  const GridSpec& g = config.grid;
  if (!profile.is_zero()) {
    v_.resize(g.ny);
    for (int j = 0; j < g.ny; ++j) v_[j] = profile.value(g.x2(j));
  }

  c_ = std::make_unique<Spectrum2D>(g);
  a_ = std::make_unique<Spectrum2D>(g);
  nc_ = std::make_unique<Spectrum2D>(g);
  na_ = std::make_unique<Spectrum2D>(g);
  tmp_ = std::make_unique<Spectrum2D>(g);
  phys_.resize(g.size());

  lap_.resize(c_->data().size());
  for (int r = 0; r < c_->rows(); ++r)
    for (int col = 0; col < c_->cols(); ++col) lap_[r * c_->cols() + col] = ws_.laplacian_symbol(r, col);
  fill_exponentials(config_, h_, lap_, e_, hphi1_, hphi2_);

  ws_.forward(initial.values(), *c_);
  mean_target_ = (*c_)(0, 0).real();
}

Stepper2D::~Stepper2D() = default;

void Stepper2D::nonlinear(const Spectrum2D& c, Spectrum2D& out) {
  auto adv = tmp_->data();
  if (v_.empty()) {
    std::fill(adv.begin(), adv.end(), cplx{});
  } else {
    std::copy(c.data().begin(), c.data().end(), adv.begin());
    ws_.apply_derivative(*tmp_, Axis::x1, 1);
    ws_.inverse(*tmp_, phys_);
    const GridSpec& g = config_.grid;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) phys_[g.index(i, j)] *= v_[j];
    ws_.forward(phys_, *tmp_);
  }

  auto o = out.data();
  const auto in = c.data();
  if (config_.disable_cube) {
    for (std::size_t m = 0; m < o.size(); ++m) o[m] = -adv[m];
    return;
  }
  ws_.dealiased_cube(c, out);
  const double nu = config_.nu, snu = config_.stabilization * config_.nu;
  for (std::size_t m = 0; m < o.size(); ++m)
    o[m] = nu * lap_[m] * (o[m] - in[m]) - snu * lap_[m] * in[m] - adv[m];
}

void Stepper2D::step() {
  nonlinear(*c_, *nc_);
  auto c = c_->data(), a = a_->data(), nc = nc_->data(), na = na_->data();
  for (std::size_t m = 0; m < c.size(); ++m) a[m] = e_[m] * c[m] + hphi1_[m] * nc[m];
  nonlinear(*a_, *na_);
  for (std::size_t m = 0; m < c.size(); ++m) a[m] += hphi2_[m] * (na[m] - nc[m]);

  const long next = steps_ + 1;
  if (!all_finite(a))
    throw NumericalError(fmt::format("blow-up detected at t = {}, step {}", next * h_, next));
  a_->symmetrize();
  last_drift_ = std::abs(a[0].real() - mean_target_);
  if (config_.pin_mean) a[0] = cplx{mean_target_, 0.0};
  std::swap(c_, a_);
  steps_ = next;
  time_ = steps_ * h_;
}

SimState Stepper2D::state() { return {time_, ws_.inverse(*c_), steps_}; }

SimState step(const SimState& state, const SolverConfig& config, const ShearProfile& profile) {
  validate(config, profile);
  Stepper2D s(config, profile, state.field, config.dt);
  s.step();
  SimState out = s.state();
  out.time += state.time;
  out.step_index += state.step_index;
  return out;
}

RunResult run(const SolverConfig& config, const Field2D& initial, const ShearProfile& profile,
              const RunOptions& options) {
  validate(config, profile);
  const long n = step_count(config.t_end, config.dt);
  const double h = n > 0 ? config.t_end / n : config.dt;
  Stepper2D stepper(config, profile, initial, h);
  DiagnosticsEvaluator diag(config.grid);
  if (!options.snapshot_dir.empty()) std::filesystem::create_directories(options.snapshot_dir);

  RunResult result{SimState{0.0, initial, 0}, {}, {}, 0.0, {}};
  std::filesystem::path last_snapshot;

  auto emit = [&](bool record, bool snapshot, SimState s) {
    if (record) {
      result.records.push_back(diag.evaluate(s.field, s.time, config.mu, options.record_laplacian));
      if (options.keep_fields) result.fields.push_back(s.field);
      if (options.on_record) options.on_record(s);
    }
    if (snapshot && !options.snapshot_dir.empty()) {
      auto path = options.snapshot_dir / fmt::format("snap_{:08d}.bin", s.step_index);
      write_snapshot(path, s.field, s.time, config.mu, config.nu);
      result.snapshots.push_back(path);
      last_snapshot = path;
    }
    result.final = std::move(s);
  };

  emit(true, true, SimState{0.0, initial, 0});
  for (long k = 1; k <= n; ++k) {
    try {
      stepper.step();
    } catch (const NumericalError& e) {
      throw NumericalError(fmt::format("{}; last finite snapshot: {}", e.what(),
                                       last_snapshot.empty() ? "none" : last_snapshot.string()));
    }
    result.max_drift = std::max(result.max_drift, stepper.last_drift());
    const bool rec = k % config.series_stride == 0 || k == n;
    const bool snap = k % config.snapshot_stride == 0 || k == n;
    if (rec || snap) emit(rec, snap, stepper.state());
  }
  return result;
}

// ---------------------------------------------------------------------------

Stepper1D::Stepper1D(const SolverConfig& config, const Field1D& initial, double h)
    : config_(config), h_(h), ws_(initial.n()) {
  if (!(h > 0)) throw ParameterError("step size must be > 0");
  const int n = initial.n();
  c_ = std::make_unique<Spectrum1D>(n);
  a_ = std::make_unique<Spectrum1D>(n);
  nc_ = std::make_unique<Spectrum1D>(n);
  na_ = std::make_unique<Spectrum1D>(n);
  lap_.resize(c_->size());
  for (int k = 0; k < c_->size(); ++k) lap_[k] = ws_.laplacian_symbol(k);
  fill_exponentials(config_, h_, lap_, e_, hphi1_, hphi2_);
  ws_.forward(initial.values(), *c_);
  mean_target_ = (*c_)[0].real();
}

Stepper1D::~Stepper1D() = default;

void Stepper1D::nonlinear(const Spectrum1D& c, Spectrum1D& out) {
  auto o = out.data();
  const auto in = c.data();
  if (config_.disable_cube) {
    std::fill(o.begin(), o.end(), cplx{});
    return;
  }
  ws_.dealiased_cube(c, out);
  const double nu = config_.nu, snu = config_.stabilization * config_.nu;
  for (std::size_t m = 0; m < o.size(); ++m) o[m] = nu * lap_[m] * (o[m] - in[m]) - snu * lap_[m] * in[m];
}

void Stepper1D::step() {
  nonlinear(*c_, *nc_);
  auto c = c_->data(), a = a_->data(), nc = nc_->data(), na = na_->data();
  for (std::size_t m = 0; m < c.size(); ++m) a[m] = e_[m] * c[m] + hphi1_[m] * nc[m];
  nonlinear(*a_, *na_);
  for (std::size_t m = 0; m < c.size(); ++m) a[m] += hphi2_[m] * (na[m] - nc[m]);
  if (!all_finite(a)) throw NumericalError(fmt::format("blow-up detected at t = {}", time_ + h_));
  last_drift_ = std::abs(a[0].real() - mean_target_);
  if (config_.pin_mean) a[0] = cplx{mean_target_, 0.0};
  std::swap(c_, a_);
  time_ += h_;
}

Field1D Stepper1D::state() { return ws_.inverse(*c_); }

Trajectory1D solve_1d(const SolverConfig& config, const Field1D& initial) {
  if (!(config.mu > 0) || !(config.nu >= 0) || !(config.dt > 0) || !(config.t_end >= 0))
    throw ParameterError("invalid 1D solver parameters");
  if (config.series_stride < 1) throw ParameterError("strides must be >= 1");
  const long n = step_count(config.t_end, config.dt);
  const double h = n > 0 ? config.t_end / n : config.dt;
  Stepper1D s(config, initial, h);
  Trajectory1D tr{{}, {}, {}, initial, 0.0};
  auto record = [&](long k) {
    const Field1D f = s.state();
    tr.t.push_back(k * h);
    tr.energy.push_back(energy(f, config.mu));
    tr.mass.push_back(average(f));
    tr.final = f;
  };
  record(0);
  for (long k = 1; k <= n; ++k) {
    s.step();
    tr.max_drift = std::max(tr.max_drift, s.last_drift());
    if (k % config.series_stride == 0 || k == n) record(k);
  }
  return tr;
}

// ---------------------------------------------------------------------------

namespace {

Field2D advance(const SolverConfig& config, const ShearProfile& profile, const Field2D& initial, double dt) {
  const long n = step_count(config.t_end, dt);
  if (n == 0) return initial;
  Stepper2D s(config, profile, initial, config.t_end / n);
  for (long k = 0; k < n; ++k) s.step();
  return s.state().field;
}

}  // namespace

ConvergenceReport convergence_order(const SolverConfig& config, const ShearProfile& profile,
                                    const Field2D& initial, int levels) {
  validate(config, profile);
  if (levels < 2) throw ParameterError("convergence study needs at least 2 levels");
  if (!(config.t_end > 0)) throw ParameterError("convergence study needs t_end > 0");

  ConvergenceReport r;
  const Field2D ref = advance(config, profile, initial, config.dt / std::pow(2.0, levels));
  const double scale = std::max(1.0, l2_norm(ref));
  for (int l = 0; l < levels; ++l) {
    const double dt = config.dt / std::pow(2.0, l);
    r.dts.push_back(dt);
    r.errors.push_back(l2_norm(advance(config, profile, initial, dt) - ref));
  }

  if (std::all_of(r.errors.begin(), r.errors.end(), [&](double e) { return e <= 1e-11 * scale; })) {
    r.exact = true;
    return r;
  }
  for (std::size_t i = 1; i < r.errors.size(); ++i)
    if (!(r.errors[i] < r.errors[i - 1])) throw NumericalError("not in asymptotic regime");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(levels);
  for (int l = 0; l < levels; ++l) {
    const double x = std::log(r.dts[l]), y = std::log(r.errors[l]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  r.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return r;
}

double spatial_error(const SolverConfig& config, const ShearProfile& profile,
                     const std::function<double(double, double)>& initial, int n, int n_ref) {
  if (n_ref % n != 0) throw ParameterError("reference grid must refine the coarse grid");
  SolverConfig coarse = config, fine = config;
  coarse.grid = GridSpec(n, n);
  fine.grid = GridSpec(n_ref, n_ref);
  validate(fine, profile);
  const Field2D a = advance(coarse, profile, Field2D::sample(coarse.grid, initial), config.dt);
  const Field2D b = advance(fine, profile, Field2D::sample(fine.grid, initial), config.dt);
  const int r = n_ref / n;
  double err = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(a(i, j) - b(r * i, r * j)));
  return err;
}

}  // namespace ache
