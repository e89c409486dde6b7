#include <doctest.h>

#include <cmath>

#include "../support.hpp"
#include "wlab/geometry.hpp"

using namespace wlab;
using namespace wlab::testing;

namespace {

// 2 pi I0(a) by its power series, independent of the quadrature.
double bessel_measure(double a) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    term *= (a * a / 4.0) / (k * k);
    sum += term;
  }
  return kTwoPi * sum;
}

}  // namespace

TEST_CASE("total measure of e^{-a cos x} against the Bessel series") {
  for (double a : {0.5, 1.0, 2.0}) {
    const auto M = circle(256, a);
    CHECK(M.total_measure() == doctest::Approx(bessel_measure(a)).epsilon(1e-13));
    REQUIRE(M.closed_form_measure().has_value());
    CHECK(*M.closed_form_measure() == doctest::Approx(bessel_measure(a)).epsilon(1e-13));
  }
  CHECK(circle(64).total_measure() == doctest::Approx(kTwoPi).epsilon(1e-15));
  CHECK(torus(32).total_measure() == doctest::Approx(kTwoPi * kTwoPi).epsilon(1e-13));
}

TEST_CASE("curvature minima for phi = cos x") {
  // Ric_{m,1} = -cos x - sin^2 x / (m - 1); for m = 2 the minimum sits at x = 2 pi / 3,
  // a node when 3 divides N.
  const auto M = circle(384, 1.0);
  auto c2 = ricci_bakry_emery(M, 2.0);
  CHECK(c2.min_value == doctest::Approx(-1.25).epsilon(1e-10));
  CHECK(c2.admissible_K == doctest::Approx(1.25).epsilon(1e-10));
  auto c3 = ricci_bakry_emery(M, 3.0);
  CHECK(c3.min_value == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(c3.argmin == 0);
  // m = inf: Ric(L) = phi'' = -cos x
  auto ci = ricci_bakry_emery(M, kInfiniteDimension);
  CHECK(ci.min_value == doctest::Approx(-1.0).epsilon(1e-10));
  // Larger m only relaxes the bound.
  CHECK(ricci_bakry_emery(M, 10.0).min_value >= c2.min_value);
}

TEST_CASE("flat models have zero curvature; m = n only for constant phi") {
  CHECK(ricci_bakry_emery(circle(64), 1.0).admissible_K == 0.0);
  CHECK(ricci_bakry_emery(torus(16), 2.0).min_value == doctest::Approx(0.0));
  CHECK_THROWS_AS(ricci_bakry_emery(circle(64, 1.0), 1.0), ConfigError);
  CHECK_THROWS_AS(ricci_bakry_emery(circle(64), 0.5), ConfigError);
}

TEST_CASE("smallest eigenvalue of 2x2 symmetric blocks") {
  const double diag[] = {3.0, 0.0, -2.0};  // packed xx, xy, yy
  CHECK(smallest_eigenvalue(diag) == doctest::Approx(-2.0));
  const double off[] = {2.0, 1.0, 2.0};
  CHECK(smallest_eigenvalue(off) == doctest::Approx(1.0));
  const double one[] = {0.7};
  CHECK(smallest_eigenvalue(one) == doctest::Approx(0.7));
}

TEST_CASE("distances and injectivity scale") {
  const auto C = circle(64);
  const int a[] = {0}, b[] = {48};
  CHECK(C.distance(C.node_at(a), C.node_at(b)) == doctest::Approx(kTwoPi / 4.0));
  CHECK(C.injectivity_scale() == doctest::Approx(kTwoPi / 2.0));
  const auto T = torus(16);
  const int p[] = {0, 0}, q[] = {12, 4};
  CHECK(T.distance(T.node_at(p), T.node_at(q)) ==
        doctest::Approx(std::hypot(kTwoPi / 4.0, kTwoPi / 4.0)));
}

TEST_CASE("ball measure and the volume-ratio comparison") {
  const auto C = circle(256);
  CHECK(C.ball_measure(0, 1.0) == doctest::Approx(2.0).epsilon(1e-10));
  const auto T = torus(64);
  CHECK(T.ball_measure(0, 1.0) == doctest::Approx(std::numbers::pi).epsilon(1e-8));
  // Flat, K = 0: the ratio is (R/r)^n, the bound (R/r)^m.
  const auto r = ball_volume_ratio_check(T, 3.0, 0.0, 0, 0.5, 1.0);
  CHECK(r.ratio == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(r.bound == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(r.ok);
  const auto M = circle(256, 1.0);
  const double K = ricci_bakry_emery(M, 2.0).admissible_K;
  CHECK(ball_volume_ratio_check(M, 2.0, K, 17, 0.3, 1.2).ok);
}

TEST_CASE("build validation names the key") {
  ManifoldConfig c;
  c.model = Model::circle;
  c.period = {kTwoPi};
  c.grid = {15};
  CHECK_THROWS_AS(WeightedManifold::build(c), ConfigError);
  c.grid = {8};
  CHECK_THROWS_AS(WeightedManifold::build(c), ConfigError);
  c.grid = {64};
  c.period = {-1.0};
  CHECK_THROWS_AS(WeightedManifold::build(c), ConfigError);
  c.period = {kTwoPi};
  c.potential = {PotentialFamily::samples, {}, std::vector<double>(10, 0.0)};
  try {
    WeightedManifold::build(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key().find("samples") != std::string::npos);
  }
  c.potential = {PotentialFamily::cos_sin, {1, 1, 1, 1}, {}};
  CHECK_THROWS_AS(WeightedManifold::build(c), ConfigError);
  CHECK_THROWS_AS(parse_model("sphere"), ConfigError);
}

TEST_CASE("sampled potential reproduces the cosine family") {
  const auto ref = circle(192, 1.0);
  ManifoldConfig c = ref.config();
  c.potential.family = PotentialFamily::samples;
  c.potential.samples.assign(ref.potential().begin(), ref.potential().end());
  c.potential.params.clear();
  const auto M = WeightedManifold::build(c);
  CHECK(M.total_measure() == doctest::Approx(ref.total_measure()).epsilon(1e-14));
  CHECK(ricci_bakry_emery(M, 2.0).min_value == doctest::Approx(-1.25).epsilon(1e-10));
}
