#include <catch_amalgamated.hpp>

#include "ache/dissipation_analyzer.hpp"
#include "ache/error.hpp"
#include "support.hpp"

using namespace ache;
using namespace testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const double pi4 = std::pow(2 * pi, 4);

ShearProfile random_profile(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(32);
  for (auto& x : v) x = rng.normal();
  return ShearProfile::tabulated(v);
}
}  // namespace

TEST_CASE("block structure", "[analyzer]") {
  const auto z = build_block(ShearProfile::zero(), 1, 1e-3, 32);
  CHECK(z.matrix.isDiagonal());
  CHECK_THAT(z.matrix(16, 16).real(), WithinRel(1e-3 * pi4, 1e-14));
  for (int r = 0; r < 32; ++r) CHECK(z.matrix(r, r).real() >= 0);

  const auto s = build_block(ShearProfile::sine(), 2, 1e-3, 32);
  for (int r = 0; r < 32; ++r) {
    int nonzero = 0;
    for (int c = 0; c < 32; ++c)
      if (c != r && s.matrix(r, c) != cplx{}) ++nonzero;
    CHECK(nonzero == ((r == 0 || r == 31) ? 1 : 2));
  }
  // row k2, col k2-1: 2 pi i k1 v_hat(1) = 2 pi i * 2 * (-i/2) = 2 pi
  CHECK_THAT(s.matrix(10, 9).real(), WithinAbs(2 * pi, 1e-13));

  CHECK_THROWS_WITH(build_block(ShearProfile::sine(), 0, 1e-3, 32),
                    Catch::Matchers::ContainsSubstring("kernel sector; no enhancement"));
  CHECK_THROWS_AS(build_block(ShearProfile::sine(), 1, 1e-3, 30), ParameterError);
}

TEST_CASE("advection part is skew-Hermitian", "[analyzer][property]") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto b = build_block(random_profile(seed), 3, 0.0, 64);
    const double defect = (b.matrix + b.matrix.adjoint()).cwiseAbs().maxCoeff();
    CHECK(defect <= 1e-13);
  }
}

TEST_CASE("semigroup norm oracles", "[analyzer]") {
  const auto z = build_block(ShearProfile::zero(), 1, 1e-3, 32);
  CHECK(semigroup_norm(z, 0.0) == 1.0);
  CHECK_THAT(semigroup_norm(z, 1.0), WithinRel(std::exp(-1e-3 * pi4), 1e-10));
  CHECK_THAT(semigroup_norm(z, 1.0), WithinAbs(0.21043, 2e-5));
  const auto pure = build_block(ShearProfile::sine_cubed(), 2, 0.0, 64);
  for (double t : {0.1, 1.0, 10.0}) CHECK_THAT(semigroup_norm(pure, t), WithinAbs(1.0, 1e-10));
  CHECK_THROWS_AS(semigroup_norm(z, -1.0), ParameterError);
  CHECK_THROWS_WITH(semigroup_norm(z, 1e308 * 10), Catch::Matchers::ContainsSubstring("exponential out of range"));
}

TEST_CASE("semigroup norm is submultiplicative and nonincreasing", "[analyzer][property]") {
  const auto b = build_block(ShearProfile::sine(), 1, 1e-4, 64);
  double prev = 1.0;
  for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double n = semigroup_norm(b, t);
    CHECK(n <= prev + 1e-10);
    prev = n;
    CHECK(semigroup_norm(b, t + 1.3) <= n * semigroup_norm(b, 1.3) * (1 + 1e-8));
  }
  const Eigen::VectorXcd ev = b.matrix.eigenvalues();
  CHECK(ev.real().minCoeff() >= -1e-8);
}

TEST_CASE("dissipation time", "[analyzer]") {
  const auto z1 = build_blocks(ShearProfile::zero(), 1, 1e-3, 32);
  const double t1 = dissipation_time(z1);
  CHECK_THAT(t1, WithinRel(std::log(2.0) / (1e-3 * pi4), 1e-3));
  CHECK_THAT(t1, WithinAbs(0.4448, 1e-3));
  const auto z2 = build_blocks(ShearProfile::zero(), 1, 2e-3, 32);
  CHECK_THAT(t1 / dissipation_time(z2), WithinAbs(2.0, 1e-3));

  const double sheared = dissipation_time(build_blocks(ShearProfile::sine(), 4, 1e-5, 64));
  const double plain = dissipation_time(build_blocks(ShearProfile::zero(), 4, 1e-5, 64));
  CHECK(sheared < plain);

  CHECK_THROWS_WITH(dissipation_time(build_blocks(ShearProfile::zero(), 1, 1e-3, 32), 0.5, 0.1),
                    Catch::Matchers::ContainsSubstring("dissipation time exceeds horizon"));
  CHECK_THROWS_AS(dissipation_time(z1, 1.5), ParameterError);
}

TEST_CASE("dissipation time converges in the truncation size", "[analyzer][property]") {
  for (const auto& p : {ShearProfile::sine(), ShearProfile::cosine(), ShearProfile::sine_cubed()}) {
    const double a = dissipation_time(build_blocks(p, 2, 1e-4, 32));
    const double b = dissipation_time(build_blocks(p, 2, 1e-4, 64));
    CHECK_THAT(a, WithinRel(b, 1e-2));
  }
}

TEST_CASE("fit_rate", "[analyzer]") {
  std::vector<double> t, n;
  for (int i = 0; i < 50; ++i) {
    t.push_back(i * 2.0);
    n.push_back(5 * std::exp(-0.3 * t.back()));
  }
  CHECK_THAT(fit_rate(t, n), WithinAbs(0.3, 1e-6));

  const auto z = build_blocks(ShearProfile::zero(), 1, 1e-3, 32);
  CHECK_THAT(fit_rate(decay_curve(z)), WithinRel(1e-3 * pi4, 1e-3));

  std::vector<double> bad = n;
  bad[10] = bad[9] * 2;
  CHECK_THROWS_AS(fit_rate(t, bad), ParameterError);
  const std::vector<double> tt{0, 1, 2, 3}, nn{1, 0.3, 0.2, 0.1};
  CHECK_THROWS_WITH(fit_rate(tt, nn), Catch::Matchers::ContainsSubstring("insufficient decay observed"));
}

TEST_CASE("decay curve shape", "[analyzer]") {
  const auto blocks = build_blocks(ShearProfile::sine(), 2, 1e-3, 32);
  const auto c = decay_curve(blocks);
  REQUIRE(c.times.size() > 5);
  CHECK(c.times[0] == 0.0);
  CHECK(c.sup_norms[0] == 1.0);
  const double dt = c.times[1];
  for (std::size_t i = 1; i < c.times.size(); ++i) CHECK_THAT(c.times[i] - c.times[i - 1], WithinRel(dt, 1e-9));
  const auto window = std::count_if(c.sup_norms.begin(), c.sup_norms.end(),
                                    [](double v) { return v <= std::exp(-1.0) && v >= 1e-10; });
  CHECK(window >= 100);
  CHECK(c.sup_norms.back() <= 1.01e-10);
  for (std::size_t i = 1; i < c.times.size(); ++i) CHECK(c.sup_norms[i] <= c.sup_norms[i - 1] + 1e-10);
}

TEST_CASE("scaling fit without shear is linear in nu", "[analyzer]") {
  const auto fit = scaling_fit(ShearProfile::zero(), {1e-1, 1e-2, 1e-3, 1e-4}, 1.0, {.K = 2, .M = 32});
  CHECK_THAT(fit.exponent, WithinAbs(1.0, 0.01));
  CHECK_THAT(fit.delta0, WithinRel(pi4, 1e-2));
  CHECK(fit.exponent_predicted == 1.0);
  CHECK_THROWS_AS(scaling_fit(ShearProfile::zero(), {1e-1, 1e-2, 1e-3}, 1.0), ParameterError);
}

TEST_CASE("rates increase with nu under shear", "[analyzer][property]") {
  const auto fit = scaling_fit(ShearProfile::sine(), {1e-1, 1e-2, 1e-3, 1e-4}, 1.0, {.K = 2, .M = 64});
  for (std::size_t i = 1; i < fit.lambda.size(); ++i) CHECK(fit.lambda[i] <= fit.lambda[i - 1]);
  CHECK(fit.m == 2);
  CHECK_THAT(fit.exponent_predicted, WithinAbs(0.8, 1e-15));
}

TEST_CASE("semigroup bound check", "[analyzer]") {
  const auto z = build_blocks(ShearProfile::zero(), 2, 1e-3, 32);
  const auto tight = verify_semigroup_bound(z, 1e-3 * pi4, 1.0, 20, 10);
  CHECK(tight.violations == 0);
  CHECK(tight.worst_margin >= -1e-15);

  const auto blocks = build_blocks(ShearProfile::sine(), 2, 1e-3, 32);
  const double lambda = fit_rate(decay_curve(blocks));
  const auto half = verify_semigroup_bound(blocks, lambda / 2, 5.0, 20, 20);
  CHECK(half.violations == 0);
  CHECK(half.checks == 2u * 20 * 20);

  // t = 0 only: |g| <= 5 |g|
  const auto zero_t = verify_semigroup_bound(blocks, lambda, 5.0, 10, 1);
  CHECK(zero_t.violations == 0);
  CHECK_THAT(zero_t.worst_margin, WithinAbs(4.0, 1e-12));
}
