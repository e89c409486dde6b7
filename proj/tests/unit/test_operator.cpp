#include <doctest.h>

#include <cmath>
#include <random>

#include "../support.hpp"
#include "wlab/operator.hpp"

using namespace wlab;
using namespace wlab::testing;

namespace {

Field sample(const WeightedManifold& M, double (*f)(double)) {
  Field out(M.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(M.coordinate(i, 0));
  return out;
}

double max_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("flat Laplacian of trigonometric modes") {
  const auto M = circle(64);
  Field f(M.size()), expect(M.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = M.coordinate(i, 0);
    f[i] = std::cos(3 * x) + 0.5 * std::sin(7 * x);
    expect[i] = -9 * std::cos(3 * x) - 24.5 * std::sin(7 * x);
  }
  CHECK(max_diff(witten_laplacian(M, f), expect) < 1e-11);
  CHECK(max_diff(drift_laplacian(M, f), expect) < 1e-11);
}

TEST_CASE("Witten Laplacian with phi = cos x: L sin = -sin + sin cos") {
  // L f = f'' - phi' f' = f'' + sin x f'
  const auto M = circle(128, 1.0);
  const Field f = sample(M, [](double x) { return std::sin(x); });
  const Field expect = sample(M, [](double x) { return -std::sin(x) + std::sin(x) * std::cos(x); });
  CHECK(max_diff(witten_laplacian(M, f), expect) < 1e-12);
  // Divergence form and drift form are two assemblies of the same operator.
  std::mt19937_64 rng(11);
  const Field g = random_band_limited(M, rng, 10);
  CHECK(max_diff(witten_laplacian(M, g), drift_laplacian(M, g)) < 1e-10);
}

TEST_CASE("torus operator is separable on products") {
  const auto T = torus(32, 0.7);
  Field f(T.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(T.coordinate(i, 1) * 2.0);
  // phi depends on x only, so L acts on a y-only function as d^2/dy^2.
  const Field lf = witten_laplacian(T, f);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(lf[i] == doctest::Approx(-4.0 * f[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("gradient and Hessian of a known field") {
  const auto T = torus(32);
  Field f(T.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = std::sin(T.coordinate(i, 0)) * std::cos(T.coordinate(i, 1));
  const auto g = gradient(T, f);
  const auto h = hessian(T, f);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = T.coordinate(i, 0), y = T.coordinate(i, 1);
    err = std::max({err, std::fabs(g[0][i] - std::cos(x) * std::cos(y)),
                    std::fabs(g[1][i] + std::sin(x) * std::sin(y)),
                    std::fabs(h[0][i] + f[i]), std::fabs(h[1][i] + std::cos(x) * std::sin(y)),
                    std::fabs(h[2][i] + f[i])});
  }
  CHECK(err < 1e-12);
  const Field hn = hessian_norm_sq(T, h);
  for (std::size_t i = 0; i < f.size(); i += 37) {
    const double x = T.coordinate(i, 0), y = T.coordinate(i, 1);
    const double cxsy = std::cos(x) * std::sin(y);
    CHECK(hn[i] == doctest::Approx(2 * f[i] * f[i] + 2 * cxsy * cxsy).scale(1.0));
  }
}

TEST_CASE("Bochner residual vanishes for random fields") {
  std::mt19937_64 rng(5);
  for (const auto& M : {circle(256, 1.0), torus(64, 0.5)}) {
    for (int k = 0; k < 5; ++k) {
      const auto r = bochner_residual(M, random_band_limited(M, rng, 5));
      CHECK(r.relative < 1e-9);
      CHECK(r.scale >= 1.0);
    }
  }
}

TEST_CASE("symmetry and sign of the Dirichlet form") {
  std::mt19937_64 rng(9);
  const auto M = torus(32, 1.0);
  const Field f = random_band_limited(M, rng, 4), h = random_band_limited(M, rng, 4);
  const double fh = integrate_mu(M, f, witten_laplacian(M, h));
  const double hf = integrate_mu(M, h, witten_laplacian(M, f));
  CHECK(std::fabs(fh - hf) <= 1e-12 * (1.0 + std::fabs(fh)));
  CHECK(integrate_mu(M, f, witten_laplacian(M, f)) < 0.0);
  // Integration by parts: -<f, Lf> = int |grad f|^2
  const double dir = integrate_mu(M, grad_norm_sq(M, gradient(M, f)));
  CHECK(-integrate_mu(M, f, witten_laplacian(M, f)) == doctest::Approx(dir).epsilon(1e-11));
  // L annihilates constants; int L f dmu = 0.
  CHECK(std::fabs(integrate_mu(M, witten_laplacian(M, f))) < 1e-11);
}

TEST_CASE("trace inequalities behind the curvature-dimension bound") {
  std::mt19937_64 rng(2);
  for (const auto& M : {circle(128, 1.0), torus(32, 1.0)}) {
    for (double m : {M.dim() + 0.5, M.dim() + 2.0}) {
      const auto d = trace_defects(M, random_band_limited(M, rng, 4), m);
      CHECK(d.laplacian >= -1e-9);
      CHECK(d.witten >= -1e-9);
    }
  }
}

TEST_CASE("gamma2 against the direct formula on the flat circle") {
  // Gamma_2(f) = |f''|^2 when phi = 0 in one dimension.
  const auto M = circle(64);
  const Field f = sample(M, [](double x) { return std::sin(2 * x); });
  const Field g2 = gamma2(M, f);
  for (std::size_t i = 0; i < f.size(); ++i)
    CHECK(g2[i] == doctest::Approx(16 * f[i] * f[i]).scale(1.0).epsilon(1e-10));
}
