#include "ache/dissipation_analyzer.hpp"

#include <fmt/format.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "ache/error.hpp"
#include "ache/io.hpp"
#include "ache/rng.hpp"

namespace ache {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double floor_level = 1e-10;

// Slowest decay rate of any k1 != 0 mode under pure hyperdiffusion; every
// block decays at least this fast because the advection part is skew.
double guaranteed_rate(const std::vector<OperatorBlock>& blocks) {
  if (blocks.empty()) return 0.0;
  return blocks.front().mu_nu * std::pow(two_pi, 4);
}

Eigen::MatrixXcd propagator(const OperatorBlock& b, double t) {
  const double scale = t * b.matrix.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(scale)) throw NumericalError("exponential out of range");
  Eigen::MatrixXcd e = (-t * b.matrix).exp();
  if (!e.allFinite()) throw NumericalError("exponential out of range");
  return e;
}

double spectral_norm(const Eigen::MatrixXcd& e) {
  const Eigen::MatrixXcd g = e.adjoint() * e;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Smallest t in [lo, hi] with f(t) <= level, assuming f nonincreasing and
// f(hi) <= level.
template <class F>
double first_below(F&& f, double level, double lo, double hi, double rel) {
  while (hi - lo > rel * hi) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= level) hi = mid;
    else lo = mid;
  }
  return hi;
}

template <class F>
double upper_bracket(F&& f, double level, double guess, double t_max) {
  double hi = std::min(guess, t_max);
  while (f(hi) > level) {
    if (hi >= t_max) return std::numeric_limits<double>::infinity();
    hi = std::min(2.0 * hi, t_max);
  }
  return hi;
}

}  // namespace

OperatorBlock build_block(const ShearProfile& profile, int k1, double mu_nu, int M) {
  if (k1 == 0) throw ParameterError("kernel sector; no enhancement");
  if (M < 32 || M % 2 != 0) throw ParameterError("block size M must be even and >= 32");
  if (!(mu_nu >= 0.0) || !std::isfinite(mu_nu)) throw ParameterError("mu*nu must be finite and >= 0");

  OperatorBlock b;
  b.k1 = k1;
  b.M = M;
  b.mu_nu = mu_nu;
  b.matrix = Eigen::MatrixXcd::Zero(M, M);

  // Toeplitz table of v_hat(d), d = -(M-1) .. M-1.
  std::vector<cplx> vhat(2 * M - 1);
  for (int d = -(M - 1); d <= M - 1; ++d) vhat[d + M - 1] = profile.coefficient(d);

  const cplx adv{0.0, two_pi * k1};
  for (int r = 0; r < M; ++r) {
    for (int c = 0; c < M; ++c) {
      const cplx v = vhat[r - c + M - 1];
      if (v != cplx{}) b.matrix(r, c) = adv * v;
    }
    const double k2 = b.k2(r);
    const double ksq = static_cast<double>(k1) * k1 + k2 * k2;
    b.matrix(r, r) += mu_nu * std::pow(two_pi, 4) * ksq * ksq;
  }
  return b;
}

std::vector<OperatorBlock> build_blocks(const ShearProfile& profile, int K, double mu_nu, int M) {
  if (K < 1) throw ParameterError("K must be >= 1");
  std::vector<OperatorBlock> out;
  out.reserve(K);
  for (int k1 = 1; k1 <= K; ++k1) out.push_back(build_block(profile, k1, mu_nu, M));
  return out;
}

double semigroup_norm(const OperatorBlock& block, double t) {
  if (!(t >= 0.0)) throw ParameterError("t must be >= 0");
  if (t == 0.0) return 1.0;
  return spectral_norm(propagator(block, t));
}

double sup_semigroup_norm(const std::vector<OperatorBlock>& blocks, double t) {
  double s = 0.0;
  for (const auto& b : blocks) {
    // |exp(-tH)| <= exp(-t mu nu (2 pi k1)^4); skip blocks that cannot win.
    const double k4 = std::pow(static_cast<double>(b.k1), 4);
    if (s > 0.0 && std::exp(-t * b.mu_nu * std::pow(two_pi, 4) * k4) <= s) continue;
    s = std::max(s, semigroup_norm(b, t));
  }
  return s;
}

DecayCurve sample_curve(const std::vector<OperatorBlock>& blocks, std::vector<double> times) {
  DecayCurve c;
  c.times = std::move(times);
  c.sup_norms.assign(c.times.size(), 0.0);
  for (const auto& b : blocks) {
    c.k1.push_back(b.k1);
    std::vector<double> n(c.times.size());
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      n[i] = semigroup_norm(b, c.times[i]);
      c.sup_norms[i] = std::max(c.sup_norms[i], n[i]);
    }
    c.block_norms.push_back(std::move(n));
  }
  return c;
}

DecayCurve decay_curve(const std::vector<OperatorBlock>& blocks, double t_max) {
  if (blocks.empty()) throw ParameterError("no operator blocks");
  auto f = [&](double t) { return sup_semigroup_norm(blocks, t); };
  const double rate = guaranteed_rate(blocks);
  const double guess_e = rate > 0 ? 1.0 / rate : 1.0;

  const double hi_e = upper_bracket(f, std::exp(-1.0), guess_e, t_max);
  if (!std::isfinite(hi_e)) throw NumericalError("insufficient decay observed");
  const double t_e = first_below(f, std::exp(-1.0), 0.0, hi_e, 1e-3);

  double t_end = t_max;
  const double hi_f = upper_bracket(f, floor_level, rate > 0 ? -std::log(floor_level) / rate : 2.0 * t_e, t_max);
  if (std::isfinite(hi_f)) t_end = first_below(f, floor_level, t_e, hi_f, 1e-3);

  // Uniform grid with ~128 points across the fit window; propagated by
  // repeated multiplication with exp(-dt H), one exponential per block.
  const double dt = std::max((t_end - t_e) / 128.0, t_end / 4096.0);
  const int n = static_cast<int>(std::ceil(t_end / dt - 1e-9));
  DecayCurve c;
  c.times.resize(n + 1);
  for (int i = 0; i <= n; ++i) c.times[i] = i * dt;
  c.sup_norms.assign(n + 1, 0.0);
  for (const auto& b : blocks) {
    c.k1.push_back(b.k1);
    const Eigen::MatrixXcd step = propagator(b, dt);
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Identity(b.M, b.M);
    std::vector<double> norms(n + 1);
    norms[0] = 1.0;
    for (int i = 1; i <= n; ++i) {
      e = step * e;
      norms[i] = spectral_norm(e);
    }
    for (int i = 0; i <= n; ++i) c.sup_norms[i] = std::max(c.sup_norms[i], norms[i]);
    c.block_norms.push_back(std::move(norms));
  }
  return c;
}

double fit_rate(std::span<const double> times, std::span<const double> norms) {
  if (times.size() != norms.size()) throw ParameterError("times and norms differ in length");
  for (std::size_t i = 1; i < norms.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ParameterError("times must be increasing");
    if (norms[i] > norms[i - 1] + 1e-10) throw ParameterError("decay curve is not nonincreasing");
  }
  std::size_t a = 0;
  while (a < norms.size() && norms[a] > std::exp(-1.0)) ++a;
  std::size_t b = a;
  while (b < norms.size() && norms[b] > floor_level) ++b;
  if (b == norms.size()) --b;
  if (a >= norms.size() || b < a || b - a + 1 < 5) throw NumericalError("insufficient decay observed");

  double st = 0, sy = 0, stt = 0, sty = 0;
  const double n = static_cast<double>(b - a + 1);
  for (std::size_t i = a; i <= b; ++i) {
    if (!(norms[i] > 0)) throw NumericalError("insufficient decay observed: nonpositive norm in window");
    const double y = -std::log(norms[i]);
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

double fit_rate(const DecayCurve& curve) { return fit_rate(curve.times, curve.sup_norms); }

double dissipation_time(const std::vector<OperatorBlock>& blocks, double fraction, double t_max) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("fraction must lie in (0,1)");
  if (blocks.empty()) throw ParameterError("no operator blocks");
  auto f = [&](double t) {
    double s = 0.0;
    for (const auto& b : blocks) {
      s = std::max(s, semigroup_norm(b, t));
      if (s > fraction) break;
    }
    return s;
  };
  const double rate = guaranteed_rate(blocks);
  const double hi = upper_bracket(f, fraction, rate > 0 ? -std::log(fraction) / rate : 1.0, t_max);
  if (!std::isfinite(hi)) throw NumericalError("dissipation time exceeds horizon");
  return first_below(f, fraction, 0.0, hi, 1e-7);
}

PowerLaw fit_power_law(std::span<const double> nu, std::span<const double> lambda) {
  if (nu.size() != lambda.size()) throw ParameterError("nu and lambda lengths differ");
  if (nu.size() < 2) throw ParameterError("power-law fit needs at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (!(nu[i] > 0) || !(lambda[i] > 0)) throw ParameterError("power-law fit needs positive data");
    const double x = std::log(nu[i]), y = std::log(lambda[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(nu.size());
  const double den = dn * sxx - sx * sx;
  if (!(den > 0)) throw ParameterError("power-law fit needs distinct nu values");
  PowerLaw p;
  p.exponent = (dn * sxy - sx * sy) / den;
  p.delta0 = std::exp((sy - p.exponent * sx) / dn);
  return p;
}

double measure_rate(const ShearProfile& profile, double mu_nu, const ScalingOptions& opt) {
  return fit_rate(decay_curve(build_blocks(profile, opt.K, mu_nu, opt.M), opt.t_max));
}

RateFit scaling_fit(const ShearProfile& profile, const std::vector<double>& nu_grid, double mu,
                    const ScalingOptions& opt) {
  if (nu_grid.size() < 4) throw ParameterError("scaling fit needs at least 4 nu values");
  if (!(mu > 0)) throw ParameterError("mu must be > 0");
  for (double nu : nu_grid)
    if (!(nu > 0) || !std::isfinite(nu)) throw ParameterError(fmt::format("nu = {} must be > 0", nu));

  RateFit fit;
  fit.nu_grid = nu_grid;
  fit.mu = mu;
  if (profile.is_zero()) {
    fit.m = 0;
    fit.exponent_predicted = 1.0;
  } else {
    const auto cp = profile.critical_points();
    fit.m = cp.m_max;
    fit.exponent_predicted =
        cp.degenerate ? std::numeric_limits<double>::quiet_NaN() : 2.0 * cp.m_max / (2.0 * cp.m_max + 1.0);
  }

  const std::size_t n = nu_grid.size();
  fit.lambda.assign(n, 0.0);
  fit.curves.resize(n);
  std::vector<std::string> errors(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        const auto blocks = build_blocks(profile, opt.K, mu * nu_grid[i], opt.M);
        fit.curves[i] = decay_curve(blocks, opt.t_max);
        fit.lambda[i] = fit_rate(fit.curves[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int threads = std::clamp<int>(opt.threads, 1, static_cast<int>(n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty()) throw NumericalError(fmt::format("nu = {}: {}", nu_grid[i], errors[i]));

  for (std::size_t i = 0; i < n; ++i)
    if (!(fit.lambda[i] > 0)) throw NumericalError(fmt::format("nu = {}: fitted rate not positive", nu_grid[i]));
  const auto law = fit_power_law(nu_grid, fit.lambda);
  fit.exponent = law.exponent;
  fit.delta0 = law.delta0;
  return fit;
}

BoundReport verify_semigroup_bound(const std::vector<OperatorBlock>& blocks, double lambda,
                                   double prefactor, int trials, int times, std::uint64_t seed) {
  if (!(lambda > 0)) throw ParameterError("lambda must be > 0");
  if (!(prefactor > 0)) throw ParameterError("prefactor must be > 0");
  if (trials < 1 || times < 1) throw ParameterError("trials and times must be >= 1");

  BoundReport r;
  r.worst_margin = std::numeric_limits<double>::infinity();
  const double horizon = std::log(prefactor / floor_level) / lambda;
  Rng rng(seed);
  for (const auto& b : blocks) {
    Eigen::MatrixXcd g(b.M, trials);
    for (int j = 0; j < trials; ++j) {
      for (int i = 0; i < b.M; ++i) g(i, j) = cplx{rng.normal(), rng.normal()};
      g.col(j).normalize();
    }
    for (int s = 0; s < times; ++s) {
      const double t = times == 1 ? 0.0 : horizon * s / (times - 1);
      const double bound = prefactor * std::exp(-lambda * t);
      const Eigen::MatrixXcd eg = t == 0.0 ? g : Eigen::MatrixXcd(propagator(b, t) * g);
      for (int j = 0; j < trials; ++j) {
        const double margin = bound - eg.col(j).norm();
        ++r.checks;
        if (margin < -1e-12 * bound) ++r.violations;  // roundoff on unit vectors
        if (margin < r.worst_margin) {
          r.worst_margin = margin;
          r.worst_t = t;
          r.worst_k1 = b.k1;
        }
      }
    }
  }
  return r;
}

void write_curves_csv(const std::filesystem::path& path, const RateFit& fit) {
  io::CsvTable csv({"nu", "k1", "t", "norm"});
  for (std::size_t i = 0; i < fit.nu_grid.size(); ++i) {
    const auto& c = fit.curves[i];
    for (std::size_t b = 0; b < c.k1.size(); ++b)
      for (std::size_t s = 0; s < c.times.size(); ++s) {
        const double row[] = {fit.nu_grid[i], static_cast<double>(c.k1[b]), c.times[s], c.block_norms[b][s]};
        csv.add_row(row);
      }
  }
  csv.write(path);
}

void write_summary_csv(const std::filesystem::path& path, const RateFit& fit) {
  io::CsvTable csv({"nu", "lambda", "delta0_fit", "exponent_fit", "exponent_predicted"});
  for (std::size_t i = 0; i < fit.nu_grid.size(); ++i) {
    const double row[] = {fit.nu_grid[i], fit.lambda[i], fit.delta0, fit.exponent, fit.exponent_predicted};
    csv.add_row(row);
  }
  csv.write(path);
}

}  // namespace ache
