#include "ache/shear_profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ache/error.hpp"

namespace ache {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr int scan_points = 4096;

// (2 pi i k)^p
cplx symbol(int k, int p) {
  cplx s{1.0, 0.0};
  const cplx f{0.0, two_pi * k};
  for (int i = 0; i < p; ++i) s *= f;
  return s;
}

template <class F>
double bisect(F&& f, double a, double b, double fa) {
  for (int it = 0; it < 80 && b - a > 1e-16; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double wrap_unit(double x) {
  x -= std::floor(x);
  return x >= 1.0 - 1e-12 ? 0.0 : x;
}

}  // namespace

ShearProfile ShearProfile::zero() {
  ShearProfile p;
  p.name_ = "zero";
  p.amplitude_ = 0.0;
  p.zero_ = true;
  p.coeffs_ = {cplx{}};
  return p;
}

ShearProfile ShearProfile::sine(double a) {
  ShearProfile p;
  p.name_ = "sin";
  p.amplitude_ = a;
  p.zero_ = a == 0.0;
  p.coeffs_ = {cplx{}, cplx{0.0, -0.5 * a}};
  return p;
}

ShearProfile ShearProfile::cosine(double a) {
  ShearProfile p;
  p.name_ = "cos";
  p.amplitude_ = a;
  p.zero_ = a == 0.0;
  p.coeffs_ = {cplx{}, cplx{0.5 * a, 0.0}};
  return p;
}

// sin^3 = (3 sin t - sin 3t) / 4
ShearProfile ShearProfile::sine_cubed(double a) {
  ShearProfile p;
  p.name_ = "sin3";
  p.amplitude_ = a;
  p.zero_ = a == 0.0;
  p.coeffs_ = {cplx{}, cplx{0.0, -0.375 * a}, cplx{}, cplx{0.0, 0.125 * a}};
  return p;
}

ShearProfile ShearProfile::tabulated(std::vector<double> samples, std::string name) {
  const int n = static_cast<int>(samples.size());
  require_grid_extent(n, "profile table length");
  Field1D f(std::move(samples));
  const Spectrum1D s = forward(f);
  ShearProfile p;
  p.name_ = std::move(name);
  p.coeffs_.assign(s.data().begin(), s.data().end());
  // Split the Nyquist coefficient evenly between +-n/2.
  p.coeffs_[n / 2] = cplx{0.5 * s[n / 2].real(), 0.0};
  p.zero_ = std::all_of(f.values().begin(), f.values().end(), [](double v) { return v == 0.0; });
  p.amplitude_ = p.zero_ ? 0.0 : 1.0;
  return p;
}

ShearProfile ShearProfile::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile table " + path.string());
  std::vector<double> v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double x;
    if (!(ls >> x) || !std::isfinite(x))
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a finite number");
    v.push_back(x);
  }
  return tabulated(std::move(v), path.filename().string());
}

ShearProfile ShearProfile::builtin(const std::string& name, double amplitude) {
  if (name == "zero") return zero();
  if (name == "sin") return sine(amplitude);
  if (name == "cos") return cosine(amplitude);
  if (name == "sin3") return sine_cubed(amplitude);
  throw ConfigError("unknown profile '" + name + "' (expected zero, sin, cos, sin3 or table)");
}

double ShearProfile::derivative(double x, int order) const {
  if (order < 0) throw ParameterError("derivative order must be >= 0");
  double v = order == 0 ? coeffs_[0].real() : 0.0;
  for (int k = 1; k < static_cast<int>(coeffs_.size()); ++k) {
    if (coeffs_[k] == cplx{}) continue;
    const cplx e = std::polar(1.0, two_pi * k * x);
    v += 2.0 * (coeffs_[k] * symbol(k, order) * e).real();
  }
  return v;
}

Field1D ShearProfile::sample(int n) const {
  return Field1D::sample(n, [this](double x) { return value(x); });
}

cplx ShearProfile::coefficient(int k) const {
  const int a = std::abs(k);
  if (a >= static_cast<int>(coeffs_.size())) return {};
  return k >= 0 ? coeffs_[a] : std::conj(coeffs_[a]);
}

double ShearProfile::sup_norm() const {
  double m = 0.0;
  for (int i = 0; i < scan_points; ++i)
    m = std::max(m, std::abs(value(static_cast<double>(i) / scan_points)));
  return m;
}

double ShearProfile::lipschitz_bound() const {
  if (zero_) return 0.0;
  const double h = 1.0 / scan_points;
  int best = 0;
  double m = 0.0;
  for (int i = 0; i < scan_points; ++i) {
    const double d = std::abs(derivative(i * h, 1));
    if (d > m) {
      m = d;
      best = i;
    }
  }
  // Polish the maximizer: root of v'' next to the best scan node.
  auto d2 = [this](double x) { return derivative(x, 2); };
  for (double a : {(best - 1) * h, best * h}) {
    const double fa = d2(a), fb = d2(a + h);
    if (fa == 0.0) m = std::max(m, std::abs(derivative(a, 1)));
    else if (fa * fb < 0) m = std::max(m, std::abs(derivative(bisect(d2, a, a + h, fa), 1)));
  }
  return m;
}

CriticalPointReport ShearProfile::critical_points(double tol) const {
  const double h = 1.0 / scan_points;
  std::vector<double> d1(scan_points + 1), d2(scan_points + 1);
  double max_d1 = 0.0;
  for (int i = 0; i <= scan_points; ++i) {
    d1[i] = derivative(i * h, 1);
    d2[i] = derivative(i * h, 2);
    max_d1 = std::max(max_d1, std::abs(d1[i]));
  }
  if (zero_ || max_d1 == 0.0) throw ParameterError("profile constant; no enhancement");
  const double accept = tol * max_d1;

  auto v1 = [this](double x) { return derivative(x, 1); };
  auto v2 = [this](double x) { return derivative(x, 2); };

  std::vector<double> cand;
  for (int i = 0; i < scan_points; ++i) {
    const double a = i * h, b = a + h;
    if (d1[i] == 0.0) cand.push_back(a);
    else if (d1[i] * d1[i + 1] < 0) cand.push_back(bisect(v1, a, b, d1[i]));
    // Roots of v' of even multiplicity do not change sign; they show up as
    // roots of v'' where v' is already small.
    if (d2[i] == 0.0) cand.push_back(a);
    else if (d2[i] * d2[i + 1] < 0) cand.push_back(bisect(v2, a, b, d2[i]));
  }

  // Sup of each derivative order, for relative thresholds.
  std::vector<double> sup(m_cap + 1, 0.0);
  for (int j = 2; j <= m_cap; ++j)
    for (int i = 0; i < scan_points; ++i) sup[j] = std::max(sup[j], std::abs(derivative(i * h, j)));

  // Flat roots are located poorly by v' alone; whenever v^(j) vanishes at the
  // current estimate, re-locate on a sign change of v^(j) or v^(j+1), which
  // have roots of lower multiplicity.
  auto polish = [&](double x, int j) {
    for (int p : {j, j + 1}) {
      auto f = [this, p](double y) { return derivative(y, p); };
      const double a = x - 2 * h, b = x + 2 * h;
      const double fa = f(a), fb = f(b);
      if (fa * fb < 0) return bisect(f, a, b, fa);
    }
    return x;
  };

  CriticalPointReport r;
  for (double x : cand) {
    if (std::abs(derivative(x, 1)) > accept) continue;
    int order = m_cap + 1;
    for (int j = 2; j <= m_cap; ++j) {
      if (std::abs(derivative(x, j)) > 1e-6 * sup[j]) {
        order = j;
        break;
      }
      x = polish(x, j);
    }
    x = wrap_unit(x);
    const bool dup = std::any_of(r.points.begin(), r.points.end(), [&](const CriticalPoint& p) {
      const double d = std::abs(p.x - x);
      return std::min(d, 1.0 - d) < 1e-8;
    });
    if (dup) continue;
    if (order > m_cap) r.degenerate = true;
    r.points.push_back({x, order});
    r.m_max = std::max(r.m_max, order);
  }
  std::sort(r.points.begin(), r.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.x < b.x; });
  return r;
}

}  // namespace ache
