#include <doctest.h>

#include <cmath>

#include "../support.hpp"
#include "wlab/harnack.hpp"

using namespace wlab;
using namespace wlab::testing;

TEST_CASE("integrated Harnack right-hand side on hand values") {
  // K = 0: (T/tau)^{m/2} exp(d^2 / 4(T - tau))
  CHECK(integrated_harnack_rhs(0.1, 0.4, 0.0, 2.0, 0.0) == doctest::Approx(4.0));
  CHECK(integrated_harnack_rhs(1.0, 2.0, 2.0, 1.0, 0.0) ==
        doctest::Approx(std::sqrt(2.0) * std::exp(1.0)));
  // K > 0 grows the bound.
  CHECK(integrated_harnack_rhs(0.1, 0.5, 1.0, 3.0, 1.0) >
        integrated_harnack_rhs(0.1, 0.5, 1.0, 3.0, 0.0));
  // Hand value: tau=1, T=2, d=1, m=2, K=0.5.
  const double q = 0.25 * std::exp(1.0) * 2.0 * 1.0 / 1.0;
  const double drift = std::exp(2.0) - std::exp(1.0);
  CHECK(integrated_harnack_rhs(1.0, 2.0, 1.0, 2.0, 0.5) == doctest::Approx(2.0 * std::exp(q + drift)));
}

TEST_CASE("sup-bound prefactor is continuous at K = 0 and below K + 1/t") {
  for (double t : {0.01, 0.5, 3.0}) {
    CHECK(sup_bound_prefactor(1e-9, t) == doctest::Approx(sup_bound_prefactor(0.0, t)).epsilon(1e-8));
    for (double K : {0.1, 1.0, 5.0}) CHECK(sup_bound_prefactor(K, t) <= K + 1.0 / t);
  }
  CHECK(sup_bound_prefactor(0.0, 0.25) == 4.0);
}

TEST_CASE("Li-Yau on the flat kernel is near equality and Li-Yau = Hamilton at K = 0") {
  const auto C = circle(512);
  const HeatState s = make_state(C, flat_kernel_images(C, 100, 0.01), 0.01);
  const auto ly = li_yau_defect(C, s, 1.0, 1e-8);
  const auto h = hamilton_harnack_defect(C, s, 1.0, 0.0, 1e-8);
  CHECK(ly.ok);
  CHECK(ly.inequality == "li_yau");
  CHECK(ly.min_defect == h.min_defect);
  CHECK(ly.min_defect / ly.scale < 1e-3);
  CHECK(ly.resolved_mass > 0.99);
  // Larger m loosens the inequality by exactly (m - 1)/2t.
  const auto ly3 = li_yau_defect(C, s, 3.0, 1e-8);
  CHECK(ly3.min_defect - ly.min_defect == doctest::Approx(1.0 / 0.01).epsilon(1e-9));
}

TEST_CASE("Hamilton under hypothesis on a weighted circle; violated with K too small") {
  const auto M = circle(256, 1.0);
  const HeatState s0 = source_state(M, 0, 0.2);
  const auto snaps = evolve(M, s0, {0.05, 0.5}).snapshots;
  const double K = ricci_bakry_emery(M, 2.0).admissible_K;
  for (const auto& s : snaps) CHECK(hamilton_harnack_defect(M, s, 2.0, K).ok);
  CHECK_THROWS_AS(hamilton_harnack_defect(M, snaps[0], 2.0, -1.0), ConfigError);
  CHECK_THROWS_AS(hamilton_harnack_defect(M, snaps[0], 0.5, 1.0), ConfigError);
}

TEST_CASE("defect roundoff masks non-positive values") {
  const auto C = circle(64);
  Field u(C.size(), 1.0);
  u[3] = 0.0;
  u[4] = -1e-18;
  const Field lu = witten_laplacian(C, u);
  const Field g = grad_norm_sq(C, gradient(C, u));
  const Field r = defect_roundoff(C, u, lu, g, 1.0);
  CHECK(std::isinf(r[3]));
  CHECK(std::isinf(r[4]));
  CHECK(std::isfinite(r[0]));
}

TEST_CASE("integrated check on a flat kernel diagonal") {
  const auto C = circle(256);
  const HeatState a = make_state(C, flat_kernel_images(C, 0, 0.05), 0.05);
  const HeatState b = make_state(C, flat_kernel_images(C, 0, 0.2), 0.2);
  const auto c = integrated_harnack_check(C, a, b, 0, 0, 1.0, 0.0);
  CHECK(c.ok);
  CHECK(c.lhs == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(c.distance == 0.0);
  CHECK_THROWS_AS(integrated_harnack_check(C, b, a, 0, 0, 1.0, 0.0), ConfigError);
}

TEST_CASE("sup bound: variant dominates sharp, A must cover max u") {
  const auto M = circle(128, 0.5);
  const HeatState s0 = source_state(M, 0, 0.1);
  const auto snaps = evolve(M, s0, {0.1, 1.0}).snapshots;
  std::vector<HeatState> all{s0};
  all.insert(all.end(), snaps.begin(), snaps.end());
  const double A = sup_bound_A(all);
  const double K = std::max(ricci_bakry_emery(M, 2.0).admissible_K, 0.1);
  for (const auto& s : snaps) {
    const auto r = sup_bound_defect(M, s, 2.0, K, A);
    CHECK(r.sharp.ok);
    CHECK(r.variant.ok);
    for (std::size_t i = 0; i < M.size(); ++i) CHECK(r.variant.defect[i] >= r.sharp.defect[i]);
  }
  CHECK_THROWS_AS(sup_bound_defect(M, snaps[0], 2.0, K, 0.0), ConfigError);
}

TEST_CASE("kernel log-derivative lower bound and fitted shape") {
  const auto C = circle(256);
  std::vector<HeatState> snaps;
  for (double t : {0.1, 0.3, 1.0}) snaps.push_back(make_state(C, flat_kernel_images(C, 0, t), t));
  const auto kb = kernel_dt_log_bounds(C, snaps, 0, 1.0, 0.0);
  CHECK(kb.lower_ok);
  CHECK(kb.min_lower_defect >= -1e-6);
  CHECK(std::isfinite(kb.fitted_C));
  // On the line dt log u = -1/2t + d^2/4t^2, below (1 + 1/sqrt t + d/t)^2 / 4.
  CHECK(kb.fitted_C <= 0.25 + 1e-6);
}
