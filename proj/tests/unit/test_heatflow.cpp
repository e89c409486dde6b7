#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "../support.hpp"
#include "wlab/kernels.hpp"

using namespace wlab;
using namespace wlab::testing;

namespace {

double max_rel(const Field& a, const Field& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::fabs(a[i] - b[i]));
    s = std::max(s, std::fabs(b[i]));
  }
  return d / s;
}

}  // namespace

TEST_CASE("flat kernel: eigenfunction sum and image sum agree") {
  for (double t : {0.01, 0.1, 1.0, 5.0}) {
    const auto C = circle(128);
    CHECK(max_rel(flat_kernel_fourier(C, 5, t), flat_kernel_images(C, 5, t)) < 1e-13);
    const auto T = torus(32);
    CHECK(max_rel(flat_kernel_fourier(T, 77, t), flat_kernel_images(T, 77, t)) < 1e-13);
  }
  // Unit mu-mass.
  const auto C = circle(128);
  CHECK(integrate_mu(C, flat_kernel_images(C, 0, 0.3)) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS(flat_kernel_images(circle(64, 1.0), 0, 0.1));
}

TEST_CASE("evolution reproduces the exact flat kernel") {
  const auto C = circle(256);
  const HeatState s0 = make_state(C, flat_kernel_images(C, 0, 0.2), 0.2);
  const auto ev = evolve(C, s0, {0.5, 1.0, 2.0});
  for (const auto& s : ev.snapshots) {
    CHECK(max_rel(s.u, flat_kernel_images(C, 0, s.t)) < 1e-6);
    CHECK(std::fabs(s.mass - 1.0) < 1e-12);
  }
  CHECK(!ev.manifest.empty());
  for (const auto& e : ev.manifest) CHECK(e.iterations >= 0);
}

TEST_CASE("Crank-Nicolson is second order on an eigenmode") {
  const auto C = circle(64);
  Field u0(C.size());
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = 1.0 + 0.5 * std::cos(2 * C.coordinate(i, 0));
  const HeatState s0 = make_state(C, u0, 0.0);
  auto err = [&](int steps) {
    const HeatState s = evolve_fixed(C, s0, 1.0, steps);
    double e = 0.0;
    for (std::size_t i = 0; i < u0.size(); ++i)
      e = std::max(e, std::fabs(s.u[i] - (1.0 + 0.5 * std::exp(-4.0) * std::cos(2 * C.coordinate(i, 0)))));
    return e;
  };
  const double ratio = err(20) / err(40);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
  // Implicit Euler fallback is first order.
  StepOptions ie;
  ie.implicit_euler = true;
  auto err_ie = [&](int steps) {
    const HeatState s = evolve_fixed(C, s0, 1.0, steps, ie);
    double e = 0.0;
    for (std::size_t i = 0; i < u0.size(); ++i)
      e = std::max(e, std::fabs(s.u[i] - (1.0 + 0.5 * std::exp(-4.0) * std::cos(2 * C.coordinate(i, 0)))));
    return e;
  };
  CHECK(err_ie(40) / err_ie(80) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("mass is conserved with a non-constant weight") {
  const auto M = torus(32, 1.0);
  const HeatState s0 = source_state(M, 100, 0.3);
  const auto ev = evolve(M, s0, {0.1, 1.0});
  for (const auto& s : ev.snapshots) {
    CHECK(std::fabs(integrate_mu(M, s.u) - s0.mass) <= 1e-12 * s0.mass);
    CHECK(*std::min_element(s.u.begin(), s.u.end()) > 0.0);
  }
}

TEST_CASE("equilibrium: u -> total mass / mu(M)") {
  const auto M = circle(128, 1.0);
  const HeatState s0 = source_state(M, 0, 0.25);
  const HeatState s = evolve(M, s0, {40.0}).snapshots.back();
  const double eq = s0.mass / M.total_measure();
  for (double v : s.u) CHECK(v == doctest::Approx(eq).epsilon(1e-6));
}

TEST_CASE("spectral gap against a dense eigensolve") {
  const auto M = circle(64, 1.0);
  const std::size_t n = M.size();
  const auto w = M.measure_weights();
  Eigen::MatrixXd S(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Field e(n, 0.0);
    e[j] = 1.0 / std::sqrt(w[j]);
    const Field le = witten_laplacian(M, e);
    for (std::size_t i = 0; i < n; ++i) S(i, j) = -std::sqrt(w[i]) * le[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  double gap = INFINITY;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()(k) > 1e-8) gap = std::min(gap, es.eigenvalues()(k));
  CHECK(spectral_gap(M) == doctest::Approx(gap).epsilon(1e-9));
  // Flat circle: gap is 1.
  CHECK(spectral_gap(circle(64)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("positivity failures carry the node") {
  const auto C = circle(64);
  Field u(C.size(), 1.0);
  u[10] = -0.5;
  const HeatState s = make_state(C, u, 0.0);
  try {
    step(C, s, 1e-4);
    FAIL("expected PositivityError");
  } catch (const PositivityError& e) {
    CHECK(e.node() == 10);
  }
  StepOptions off;
  off.check_positivity = false;
  CHECK_NOTHROW(step(C, s, 1e-4, off));
}

TEST_CASE("evolve rejects out-of-order times; dt_log_u is Lu/u") {
  const auto C = circle(64, 0.5);
  const HeatState s0 = source_state(C, 3, 0.3);
  CHECK_THROWS(evolve(C, s0, {0.5, 0.2}));
  const Field q = dt_log_u(C, s0);
  const Field lu = witten_laplacian(C, s0.u);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == doctest::Approx(lu[i] / s0.u[i]));
}

TEST_CASE("initial_delta: flat case exact, weighted case positive and unit mass") {
  const auto C = circle(128);
  const HeatState a = initial_delta(C, 7, 0.3);
  CHECK(a.origin == 0.0);
  CHECK(max_rel(a.u, flat_kernel_images(C, 7, 0.3)) < 1e-13);
  const auto M = circle(128, 1.0);
  const HeatState b = initial_delta(M, 7, 0.3);
  CHECK(b.t == doctest::Approx(0.3));
  CHECK(b.elapsed() == doctest::Approx(0.15));
  CHECK(b.mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*std::min_element(b.u.begin(), b.u.end()) > 0.0);
  CHECK_THROWS_AS(initial_delta(M, 7, 0.0), ConfigError);
}

TEST_CASE("scalar and AVX2 kernels give the same evolution") {
  if (!kernels::avx2_table()) return;
  const auto M = torus(32, 1.0);
  const HeatState s0 = source_state(M, 0, 0.3);
  const kernels::Isa before = kernels::active().isa;
  kernels::force(kernels::Isa::scalar);
  const HeatState a = evolve_fixed(M, s0, 0.5, 20);
  kernels::force(kernels::Isa::avx2);
  const HeatState b = evolve_fixed(M, s0, 0.5, 20);
  kernels::force(before);
  CHECK(max_rel(a.u, b.u) < 1e-12);
}

TEST_CASE("time-dependent rate: c(t) = 2 is time doubled") {
  const auto C = circle(128);
  const HeatState s0 = make_state(C, flat_kernel_images(C, 0, 0.2), 0.2);
  const auto ev = evolve(C, s0, {0.6}, {}, [](double) { return 2.0; });
  CHECK(max_rel(ev.snapshots[0].u, flat_kernel_images(C, 0, 1.0)) < 1e-6);
}
