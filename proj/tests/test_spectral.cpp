#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "ache/error.hpp"
#include "ache/field_algebra.hpp"
#include "ache/rng.hpp"
#include "ache/spectral.hpp"

using namespace ache;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

double max_abs_diff(const Field2D& a, const Field2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

double sup(const Field2D& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

Field2D random_field(GridSpec g, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(g.size());
  for (auto& x : v) x = rng.normal();
  return Field2D(g, std::move(v));
}

// Random trig polynomial with |k1|, |k2| <= kmax, evaluated pointwise.
Field2D random_bandlimited(GridSpec g, int kmax, std::uint64_t seed) {
  Rng rng(seed);
  struct Mode { int k1, k2; double a, b; };
  std::vector<Mode> modes;
  for (int k1 = 0; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2) modes.push_back({k1, k2, rng.normal(), rng.normal()});
  return Field2D::sample(g, [&](double x, double y) {
    double s = 0.0;
    for (const auto& m : modes) {
      const double th = 2 * pi * (m.k1 * x + m.k2 * y);
      s += m.a * std::cos(th) + m.b * std::sin(th);
    }
    return s / modes.size();
  });
}

}  // namespace

TEST_CASE("forward of a constant is its value at k = 0", "[spectral]") {
  const GridSpec g(16, 8);
  const Spectrum2D s = forward(Field2D::constant(g, 1.0));
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c) {
      const double expect = (r == 0 && c == 0) ? 1.0 : 0.0;
      CHECK_THAT(std::abs(s(r, c) - cplx{expect, 0.0}), WithinAbs(0.0, 1e-15));
    }
}

TEST_CASE("single streamwise mode has coefficients -i/2 and i/2", "[spectral]") {
  const GridSpec g(32, 32);
  const auto s = forward(Field2D::sample(g, [](double x, double) { return std::sin(2 * pi * x); }));
  CHECK(std::abs(s.at(1, 0) - cplx{0.0, -0.5}) < 1e-15);
  CHECK(std::abs(s.at(-1, 0) - cplx{0.0, 0.5}) < 1e-15);
  double rest = 0.0;
  for (int k2 = -16; k2 < 16; ++k2)
    for (int k1 = -16; k1 < 16; ++k1)
      if (!(k2 == 0 && std::abs(k1) == 1)) rest = std::max(rest, std::abs(s.at(k1, k2)));
  CHECK(rest < 1e-15);
}

TEST_CASE("round trip and Parseval on random data", "[spectral]") {
  const GridSpec g(32, 32);
  Spectral2D ws(g);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Field2D f = random_field(g, seed);
    const Spectrum2D s = ws.forward(f);
    const Field2D back = ws.inverse(s);
    CHECK(max_abs_diff(f, back) <= 1e-13);
    CHECK(max_abs_diff(f, back) <= 10 * std::numeric_limits<double>::epsilon() * sup(f) * 4);

    // Parseval using the full (two-sided) spectrum.
    double lhs = 0.0;
    for (int k2 = -16; k2 < 16; ++k2)
      for (int k1 = -16; k1 < 16; ++k1) lhs += std::norm(s.at(k1, k2));
    double rhs = 0.0;
    for (double v : f.values()) rhs += v * v;
    rhs /= static_cast<double>(f.size());
    CHECK_THAT(lhs, WithinRel(rhs, 1e-12));
  }
}

TEST_CASE("symmetrize removes the part a real inverse drops", "[spectral]") {
  const GridSpec g(16, 16);
  Spectral2D ws(g);
  const Field2D f = random_field(g, 9);
  Spectrum2D s = ws.forward(f);
  const Spectrum2D before = s;
  s.symmetrize();
  double moved = 0.0;
  for (std::size_t m = 0; m < s.data().size(); ++m) moved = std::max(moved, std::abs(s.data()[m] - before.data()[m]));
  CHECK(moved <= 1e-16);

  // anti-Hermitian junk in both self-conjugate columns, including k2 = 0 and -8
  const int last = s.cols() - 1;
  for (const int col : {0, last}) {
    s(s.row_of(3), col) += cplx{0.0, 1.0};
    s(s.row_of(-3), col) += cplx{0.0, 1.0};
    s(0, col) += cplx{0.0, 2.0};
    s(s.row_of(-8), col) += cplx{0.0, 2.0};
  }
  s(s.row_of(5), 3) += cplx{1.0, 1.0};   // a free column, must survive
  const Field2D dropped = ws.inverse(s);
  s.symmetrize();
  CHECK(max_abs_diff(ws.inverse(s), dropped) <= 1e-13);
  for (const int col : {0, last})
    for (int r = 0; r < s.rows(); ++r) CHECK(s(r, col) == std::conj(s(s.row_of(-s.k2(r)) % s.rows(), col)));
  CHECK(s(s.row_of(5), 3) == before(s.row_of(5), 3) + cplx{1.0, 1.0});
}

TEST_CASE("non-finite input is rejected", "[spectral]") {
  std::vector<double> v(64, 0.0);
  v[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Field2D(GridSpec(8, 8), v), NumericalError);
  CHECK_THROWS_WITH(Field2D(GridSpec(8, 8), v), Catch::Matchers::ContainsSubstring("non-finite field"));
}

TEST_CASE("grid extents must be even and at least 8", "[spectral]") {
  CHECK_THROWS_AS(GridSpec(6, 8), ParameterError);
  CHECK_THROWS_AS(GridSpec(9, 8), ParameterError);
  CHECK_NOTHROW(GridSpec(8, 10));
}

TEST_CASE("spectral derivatives match analytic ones", "[spectral]") {
  const GridSpec g(32, 32);
  const auto s2 = Field2D::sample(g, [](double, double y) { return std::sin(2 * pi * y); });
  const auto ds2 = derivative(s2, Axis::x2, 1);
  const auto expect = Field2D::sample(g, [](double, double y) { return 2 * pi * std::cos(2 * pi * y); });
  CHECK(max_abs_diff(ds2, expect) <= 1e-12);
  CHECK(sup(derivative(s2, Axis::x1, 1)) <= 1e-14);

  const auto s4 = Field2D::sample(g, [](double x, double) { return std::sin(4 * pi * x); });
  const auto d4 = derivative(s4, Axis::x1, 4);
  const double c = std::pow(4 * pi, 4);
  CHECK(max_abs_diff(d4, s4 * c) <= 1e-11 * c);

  CHECK_THROWS_AS(derivative(s2, Axis::x1, 0), ParameterError);
}

TEST_CASE("laplacian and bilaplacian symbols", "[spectral]") {
  const GridSpec g(16, 16);
  const auto f = Field2D::sample(g, [](double x, double) { return std::sin(2 * pi * x); });
  CHECK(max_abs_diff(laplacian(f), f * (-4 * pi * pi)) <= 1e-12);

  const auto h = Field2D::sample(g, [](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); });
  const double c = 64 * std::pow(pi, 4);
  CHECK(max_abs_diff(bilaplacian(h), h * c) <= 1e-12 * c);

  const auto one = Field2D::constant(g, 2.5);
  CHECK(sup(laplacian(one)) == 0.0);
  CHECK(sup(bilaplacian(one)) == 0.0);

  const auto r = random_field(g, 7);
  const auto bl = bilaplacian(r);
  CHECK(max_abs_diff(bl, laplacian(laplacian(r))) <= 1e-10 * sup(bl));
}

TEST_CASE("mixed derivatives commute and odd Nyquist derivatives vanish", "[spectral]") {
  const GridSpec g(16, 16);
  const auto r = random_field(g, 11);
  Spectral2D ws(g);
  const auto a = ws.derivative(ws.derivative(r, Axis::x1, 1), Axis::x2, 1);
  const auto b = ws.derivative(ws.derivative(r, Axis::x2, 1), Axis::x1, 1);
  CHECK(max_abs_diff(a, b) <= 1e-11 * sup(a));

  // cos(pi * nx * x) is the Nyquist mode in x1.
  const auto nyq = Field2D::sample(g, [](double x, double) { return std::cos(16 * pi * x); });
  CHECK(sup(ws.derivative(nyq, Axis::x1, 1)) <= 1e-12);
  CHECK(sup(ws.derivative(nyq, Axis::x1, 2)) > 1.0);
}

TEST_CASE("dealiased cube", "[spectral]") {
  const GridSpec g(32, 32);
  CHECK_THAT(dealiased_cube(Field2D::constant(g, 0.7))(3, 5), WithinAbs(0.343, 1e-14));

  const auto s = Field2D::sample(g, [](double x, double) { return std::sin(2 * pi * x); });
  const auto expect = Field2D::sample(g, [](double x, double) {
    return 0.75 * std::sin(2 * pi * x) - 0.25 * std::sin(6 * pi * x);
  });
  CHECK(max_abs_diff(dealiased_cube(s), expect) <= 1e-12);

  // Modes <= N/6: the pointwise cube on a 4x finer grid is the exact cube,
  // sampled back at the coarse nodes.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GridSpec fine(128, 128);
    const auto raw = random_bandlimited(g, 5, seed);
    const double scale = 1.0 / l2_norm(raw);
    const auto f = raw * scale;
    const auto ff = random_bandlimited(fine, 5, seed) * scale;
    const auto cube = dealiased_cube(f);
    double err = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) err = std::max(err, std::abs(cube(i, j) - std::pow(ff(4 * i, 4 * j), 3)));
    CHECK(err <= 1e-11);
  }
}

TEST_CASE("dealiased cube keeps a real result on Nyquist-heavy data", "[spectral]") {
  const GridSpec g(8, 8);
  const auto f = random_field(g, 3);
  const auto c = dealiased_cube(f);
  for (double v : c.values()) CHECK(std::isfinite(v));
  // Round trip of the dealiased result is stable (it already lives on the grid).
  const auto again = inverse(forward(c));
  CHECK(max_abs_diff(c, again) <= 1e-13 * std::max(1.0, sup(c)));
}

TEST_CASE("one-dimensional transforms", "[spectral]") {
  const int n = 32;
  const auto f = Field1D::sample(n, [](double x) { return std::sin(2 * pi * x); });
  const auto s = forward(f);
  CHECK(std::abs(s[1] - cplx{0.0, -0.5}) < 1e-15);
  const auto d = derivative(f, 1);
  for (int j = 0; j < n; ++j) CHECK_THAT(d[j], WithinAbs(2 * pi * std::cos(2 * pi * j / double(n)), 1e-12));
  const auto cube = dealiased_cube(f);
  for (int j = 0; j < n; ++j) {
    const double x = j / double(n);
    CHECK_THAT(cube[j], WithinAbs(0.75 * std::sin(2 * pi * x) - 0.25 * std::sin(6 * pi * x), 1e-12));
  }
  const auto back = inverse(s);
  for (int j = 0; j < n; ++j) CHECK_THAT(back[j], WithinAbs(f[j], 1e-15));
}
