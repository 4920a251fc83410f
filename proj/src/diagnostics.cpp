#include "ache/diagnostics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "ache/error.hpp"
#include "ache/field_algebra.hpp"
#include "ache/io.hpp"

namespace ache {

namespace {

double potential_mean(std::span<const double> c) {
  double s = 0.0;
  for (double x : c) {
    const double q = x * x - 1.0;
    s += 0.25 * q * q;
  }
  return s / static_cast<double>(c.size());
}

double mean_square(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

double slope_of(std::span<const double> t, std::span<const double> y, std::size_t a, std::size_t b) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  const double n = static_cast<double>(b - a + 1);
  for (std::size_t i = a; i <= b; ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

std::vector<std::size_t> pair_grid(std::size_t n, const BootstrapOptions& opt) {
  std::vector<std::size_t> idx;
  std::size_t m = n;
  if (!opt.full_pairs && n * (n + 1) / 2 > opt.max_pairs)
    m = static_cast<std::size_t>((std::sqrt(8.0 * opt.max_pairs + 1.0) - 1.0) / 2.0);
  m = std::max<std::size_t>(std::min(m, n), std::min<std::size_t>(n, 2));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = m == 1 ? 0 : static_cast<std::size_t>(std::llround(double(i) * double(n - 1) / double(m - 1)));
    if (idx.empty() || idx.back() != k) idx.push_back(k);
  }
  return idx;
}

void note(AssumptionResult& r, double margin) {
  ++r.checks;
  r.worst_margin = std::min(r.worst_margin, margin);
  if (margin < 0) r.pass = false;
}

// |x(t)| <= 20 e^{-lambda (t-s)/4} |x(s)| over the pair grid.
AssumptionResult decay_pairs(const std::vector<DiagnosticsRecord>& recs, double lambda, double floor,
                             const std::vector<std::size_t>& idx, double DiagnosticsRecord::*field) {
  AssumptionResult r;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const auto& s = recs[idx[a]];
    if (s.*field <= floor) continue;
    for (std::size_t b = a; b < idx.size(); ++b) {
      const auto& t = recs[idx[b]];
      if (t.*field <= floor) continue;
      note(r, 20.0 * std::exp(-lambda * (t.t - s.t) / 4.0) * (s.*field) - t.*field);
    }
  }
  return r;
}

std::string fmt_double(double x) { return io::format_double(x); }

}  // namespace

double energy(const Field2D& c, double mu, Spectral2D& ws) {
  const double g1 = mean_square(ws.derivative(c, Axis::x1, 1).values());
  const double g2 = mean_square(ws.derivative(c, Axis::x2, 1).values());
  return potential_mean(c.values()) + 0.5 * mu * (g1 + g2);
}

double energy(const Field2D& c, double mu) {
  Spectral2D ws(c.grid());
  return energy(c, mu, ws);
}

double energy(const Field1D& c, double mu) {
  return potential_mean(c.values()) + 0.5 * mu * mean_square(derivative(c, 1).values());
}

DiagnosticsEvaluator::DiagnosticsEvaluator(GridSpec grid) : ws_(grid) {}

DiagnosticsRecord DiagnosticsEvaluator::evaluate(const Field2D& c, double t, double mu, bool with_laplacian) {
  DiagnosticsRecord r;
  r.t = t;
  r.mass = average(c);
  r.energy = energy(c, mu, ws_);
  const auto d = decompose(c);
  r.energy_par = energy(lift(d.parallel, c.grid()), mu, ws_);
  r.norm_perp = l2_norm(d.perp);
  r.norm_phi = l2_norm(ws_.derivative(d.perp, Axis::x1, 1));
  r.norm_psi = l2_norm(ws_.derivative(d.perp, Axis::x2, 1));
  r.norm_dx2_par = l2_norm(ws_.derivative(lift(d.parallel, c.grid()), Axis::x2, 1));
  if (with_laplacian) r.norm_lap_perp = l2_norm(ws_.laplacian(d.perp));
  return r;
}

double dissipation_residual(const Field2D& a, const Field2D& b, double dt, double mu, double nu,
                            const ShearProfile& profile) {
  if (!(dt > 0)) throw ParameterError("dt must be > 0");
  Spectral2D ws(a.grid());
  const double dEdt = (energy(b, mu, ws) - energy(a, mu, ws)) / dt;
  const Field2D m = (a + b) * 0.5;
  const GridSpec& g = m.grid();

  const Field2D lap = ws.laplacian(m);
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double c = m.values()[i];
    w[i] = c * c * c - c - mu * lap.values()[i];
  }
  const Field2D wf(g, std::move(w));
  const double grad_w = mean_square(ws.derivative(wf, Axis::x1, 1).values()) +
                        mean_square(ws.derivative(wf, Axis::x2, 1).values());

  double shear = 0.0;
  if (!profile.is_zero()) {
    const Field2D d1 = ws.derivative(m, Axis::x1, 1), d2 = ws.derivative(m, Axis::x2, 1);
    for (int j = 0; j < g.ny; ++j) {
      const double vp = profile.derivative(g.x2(j), 1);
      for (int i = 0; i < g.nx; ++i) shear += vp * d1(i, j) * d2(i, j);
    }
    shear *= mu / static_cast<double>(g.size());
  }
  return std::abs(dEdt + nu * grad_w + shear);
}

double fit_perp_decay(std::span<const double> t, std::span<const double> norm) {
  if (t.size() != norm.size() || t.empty()) throw ParameterError("series lengths differ or are empty");
  const double n0 = norm[0];
  const double lowest = *std::min_element(norm.begin(), norm.end());
  if (!(n0 > 0) || !(lowest <= n0 * std::exp(-2.0))) throw NumericalError("insufficient decay");
  std::size_t a = 0;
  while (norm[a] > n0 * std::exp(-1.0)) ++a;
  std::size_t b = a;
  while (b + 1 < norm.size() && norm[b] > 1e-10) ++b;
  if (b - a + 1 < 3) throw NumericalError("insufficient decay: too few points in the fit window");
  std::vector<double> y(norm.size());
  for (std::size_t i = a; i <= b; ++i) {
    if (!(norm[i] > 0)) throw NumericalError("insufficient decay: nonpositive norm in window");
    y[i] = -std::log(norm[i]);
  }
  return slope_of(t, y, a, b);
}

TheoremVerdict theorem_check(std::span<const double> t, std::span<const double> norm_perp, double lambda,
                             double c_perp_0_norm, double floor) {
  if (!(lambda > 0)) throw ParameterError("lambda must be > 0");
  if (t.size() != norm_perp.size()) throw ParameterError("series lengths differ");
  TheoremVerdict v;
  v.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double bound = 20.0 * std::exp(-lambda * t[i] / 4.0) * c_perp_0_norm;
    if (norm_perp[i] <= floor) {
      ++v.floored;
      continue;
    }
    const double margin = bound - norm_perp[i];
    if (margin < v.worst_margin) {
      v.worst_margin = margin;
      v.worst_t = t[i];
    }
    if (margin < 0) ++v.violations;
  }
  if (v.floored == t.size() && !t.empty()) {
    v.worst_margin = 20.0 * std::exp(-lambda * t.back() / 4.0) * c_perp_0_norm;
    v.worst_t = t.back();
  }
  v.holds = v.violations == 0;
  try {
    v.fitted_rate = fit_perp_decay(t, norm_perp);
    v.rate_ratio = v.fitted_rate / (lambda / 4.0);
  } catch (const Error& e) {
    v.fit_error = e.what();
  }
  return v;
}

ConstantsReport constants_from_norms(double norm_psi0, double norm_perp0, double norm_phi0, double lipschitz_v,
                                     double mu, double lambda, double c_star) {
  if (!(lambda > 0)) throw ParameterError("lambda must be > 0");
  if (!(c_star > 0)) throw ParameterError("C_star must be > 0");
  if (!(mu > 0)) throw ParameterError("mu must be > 0");
  ConstantsReport k;
  k.lambda = lambda;
  k.c_star = c_star;
  k.norm_psi0 = norm_psi0;
  k.norm_perp0 = norm_perp0;
  k.norm_phi0 = norm_phi0;
  k.lipschitz_v = lipschitz_v;
  const double r = std::sqrt(10.0 / mu) + 1.0;
  k.c1 = 160000.0 * r * r * c_star;
  k.c2 = 20.0 * c_star;
  const double p2 = norm_perp0 * norm_perp0;
  const double q = 20.0 * lipschitz_v + 1.0;
  k.y0 = 2.0 * (norm_psi0 * norm_psi0 + k.c1 * (p2 + 4.0) * p2 + q * q / 4.0);
  k.m0 = k.y0 * std::exp(k.c2 * (10.0 / mu) * p2 * p2 + 2.0);
  k.z0 = 2.0 * (k.m0 + 400.0);
  k.tau_star = 4.0 / lambda;
  k.smallness_ok = norm_phi0 <= std::min(lambda, 1.0);
  return k;
}

ConstantsReport constants(const Field2D& c0, double mu, double, double lambda, double c_star,
                          const ShearProfile& profile) {
  Spectral2D ws(c0.grid());
  const auto d = decompose(c0);
  return constants_from_norms(l2_norm(ws.derivative(d.perp, Axis::x2, 1)), l2_norm(d.perp),
                              l2_norm(ws.derivative(d.perp, Axis::x1, 1)), profile.lipschitz_bound(), mu,
                              lambda, c_star);
}

BootstrapReport bootstrap_monitor(const std::vector<DiagnosticsRecord>& recs, const ConstantsReport& k, double mu,
                                  double nu, const BootstrapOptions& opt) {
  BootstrapReport rep;
  if (recs.empty()) return rep;
  const double lambda = k.lambda;
  const auto idx = pair_grid(recs.size(), opt);
  rep.h1 = decay_pairs(recs, lambda, opt.floor, idx, &DiagnosticsRecord::norm_perp);
  rep.h3 = decay_pairs(recs, lambda, opt.floor, idx, &DiagnosticsRecord::norm_phi);

  // H2: the integral only grows with t, so the horizon is the worst case.
  std::vector<double> cum(recs.size(), 0.0);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const double a = recs[i - 1].norm_lap_perp, b = recs[i].norm_lap_perp;
    if (std::isnan(a) || std::isnan(b)) throw ParameterError("records lack |Lap c_perp|; enable the monitor column");
    cum[i] = cum[i - 1] + 0.5 * (recs[i].t - recs[i - 1].t) * (a * a + b * b);
  }
  for (std::size_t s = 0; s < recs.size(); ++s) {
    if (recs[s].norm_perp <= opt.floor) continue;
    note(rep.h2, 10.0 * recs[s].norm_perp * recs[s].norm_perp - mu * nu * (cum.back() - cum[s]));
  }

  rep.b0_empirical = 0.0;
  for (const auto& r : recs) {
    note(rep.h4, k.m0 - r.norm_psi * r.norm_psi);
    rep.b0_empirical = std::max(rep.b0_empirical, r.norm_dx2_par * r.norm_dx2_par);
  }

  // tau* window, with log-linear interpolation between records.
  const double tau = k.tau_star;
  std::size_t j = 0;
  for (std::size_t s = 0; s < recs.size(); ++s) {
    const double target = recs[s].t + tau;
    if (target > recs.back().t || recs[s].norm_perp <= opt.floor) continue;
    while (j + 1 < recs.size() && recs[j + 1].t < target) ++j;
    j = std::max(j, s);
    std::size_t hi = std::min(j + 1, recs.size() - 1);
    const auto& A = recs[j];
    const auto& B = recs[hi];
    if (A.norm_perp <= opt.floor || B.norm_perp <= opt.floor) continue;
    const double w = B.t > A.t ? (target - A.t) / (B.t - A.t) : 0.0;
    const double later = std::exp((1 - w) * std::log(A.norm_perp) + w * std::log(B.norm_perp));
    note(rep.tau_window, std::exp(-1.0) * recs[s].norm_perp - later);
  }
  return rep;
}

void KeyValueReport::set(const std::string& key, double value) {
  items_.emplace_back(key, fmt_double(value));
}
void KeyValueReport::set(const std::string& key, long long value) { items_.emplace_back(key, std::to_string(value)); }
void KeyValueReport::set(const std::string& key, bool value) { items_.emplace_back(key, value ? "true" : "false"); }
void KeyValueReport::set(const std::string& key, const std::string& value) { items_.emplace_back(key, value); }

void KeyValueReport::add(const ConstantsReport& k, const std::string& p) {
  set(p + "lambda", k.lambda);
  set(p + "C_star", k.c_star);
  set(p + "C1", k.c1);
  set(p + "C2", k.c2);
  set(p + "Y0", k.y0);
  set(p + "M0", k.m0);
  set(p + "Z0", k.z0);
  set(p + "B0_empirical", k.b0_empirical);
  set(p + "tau_star", k.tau_star);
  set(p + "norm_perp0", k.norm_perp0);
  set(p + "norm_phi0", k.norm_phi0);
  set(p + "norm_psi0", k.norm_psi0);
  set(p + "lipschitz_v", k.lipschitz_v);
  set(p + "smallness_ok", k.smallness_ok);
}

void KeyValueReport::add(const TheoremVerdict& v, const std::string& p) {
  set(p + "holds", v.holds);
  set(p + "worst_margin", v.worst_margin);
  set(p + "worst_t", v.worst_t);
  set(p + "violations", static_cast<long long>(v.violations));
  set(p + "floored_records", static_cast<long long>(v.floored));
  set(p + "fitted_rate", v.fitted_rate);
  set(p + "rate_ratio", v.rate_ratio);
  if (!v.fit_error.empty()) set(p + "fit_error", v.fit_error);
}

void KeyValueReport::add(const BootstrapReport& b, const std::string& p) {
  auto one = [&](const char* name, const AssumptionResult& r) {
    set(p + name + ".pass", r.pass);
    set(p + name + ".worst_margin", r.worst_margin);
    set(p + name + ".checks", static_cast<long long>(r.checks));
  };
  one("H1", b.h1);
  one("H2", b.h2);
  one("H3", b.h3);
  one("H4", b.h4);
  one("tau_window", b.tau_window);
  set(p + "B0_empirical", b.b0_empirical);
}

std::string KeyValueReport::text() const {
  std::string s;
  for (const auto& [k, v] : items_) s += k + " = " + v + "\n";
  return s;
}

void KeyValueReport::write(const std::filesystem::path& path) const { io::write_atomic(path, text()); }

void write_series_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRecord>& records) {
  const bool lap = std::any_of(records.begin(), records.end(), [](const auto& r) { return !std::isnan(r.norm_lap_perp); });
  std::vector<std::string> header{"t", "mass", "energy", "norm_perp_L2", "norm_phi_L2", "norm_psi_L2",
                                  "norm_dx2_cpar_L2", "energy_par"};
  if (lap) header.push_back("norm_lap_perp_L2");
  io::CsvTable csv(header);
  for (const auto& r : records) {
    std::vector<double> row{r.t, r.mass, r.energy, r.norm_perp, r.norm_phi, r.norm_psi, r.norm_dx2_par, r.energy_par};
    if (lap) row.push_back(r.norm_lap_perp);
    csv.add_row(row);
  }
  csv.write(path);
}

}  // namespace ache
