#include "wlab/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wlab/kernels.hpp"

namespace wlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_time(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("harnack: elapsed time must be positive");
}

void require_K(double K) {
  if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("K", "must be finite and >= 0");
}

// Fills resolved/min/argmin/ok from defect and the roundoff estimate.
void finish(const WeightedManifold& M, const HeatState& s, const Field& roundoff,
            HarnackReport& r) {
  const std::size_t n = M.size();
  r.resolved.assign(n, 0);
  const auto w = M.measure_weights();
  double mass = 0.0, resolved_mass = 0.0;
  r.min_defect = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    mass += s.u[i] * w[i];
    if (roundoff[i] > 1e-3 * r.tol) continue;
    r.resolved[i] = 1;
    resolved_mass += s.u[i] * w[i];
    if (r.defect[i] < r.min_defect) {
      r.min_defect = r.defect[i];
      r.argmin = i;
    }
  }
  r.resolved_mass = mass > 0.0 ? resolved_mass / mass : 0.0;
  if (!std::isfinite(r.min_defect)) {
    r.min_defect = NAN;
    r.ok = false;
    return;
  }
  r.ok = r.min_defect >= -r.tol;
}

struct Derivs {
  Field lu;
  Field gsq;
};

Derivs derivs(const WeightedManifold& M, const HeatState& s) {
  return {witten_laplacian(M, s.u), grad_norm_sq(M, gradient(M, s.u))};
}

}  // namespace

Field defect_roundoff(const WeightedManifold& M, const Field& u, const Field& lu,
                      const Field& grad_sq, double c1) {
  const SpectralGrid& g = M.spectral();
  const auto spec = g.transform(u);
  const double s0 = g.spectral_moment(spec, 0);
  const double s1 = g.spectral_moment(spec, 1);
  const double s2 = g.spectral_moment(spec, 2);
  double dphi = 0.0;
  for (const auto& c : gradient(M, M.potential())) dphi = std::max(dphi, kernels::max_abs(c));
  const double safety = 4.0 * std::log2(static_cast<double>(M.size()));
  const double e = safety * kEps;
  const double lap_err = e * (s2 + dphi * s1);
  Field out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ui = u[i];
    if (!(ui > 0.0)) {
      out[i] = INFINITY;
      continue;
    }
    const double grad = std::sqrt(grad_sq[i]);
    out[i] = std::fabs(c1) * (lap_err / ui + std::fabs(lu[i]) * e * s0 / (ui * ui)) +
             2.0 * grad * e * s1 / (ui * ui) + 2.0 * grad_sq[i] * e * s0 / (ui * ui * ui);
  }
  return out;
}

HarnackReport hamilton_harnack_defect(const WeightedManifold& M, const HeatState& s, double m,
                                      double K, double rel_tol) {
  dimension_gap(M, m);
  if (!std::isfinite(m)) throw ConfigError("m", "Harnack inequalities need finite m");
  require_K(K);
  const double t = s.elapsed();
  require_time(t);
  HarnackReport r;
  r.inequality = "hamilton";
  r.m = m;
  r.K = K;
  r.t = t;
  const double c0 = m / (2.0 * t) * std::exp(4.0 * K * t);
  const double c1 = std::exp(2.0 * K * t);
  r.scale = c0;
  r.tol = rel_tol * c0;
  const Derivs d = derivs(M, s);
  r.defect.resize(M.size());
  kernels::active().harnack(c0, c1, d.lu.data(), d.gsq.data(), s.u.data(), r.defect.data(),
                            M.size());
  finish(M, s, defect_roundoff(M, s.u, d.lu, d.gsq, c1), r);
  return r;
}

HarnackReport li_yau_defect(const WeightedManifold& M, const HeatState& s, double m,
                            double rel_tol) {
  HarnackReport r = hamilton_harnack_defect(M, s, m, 0.0, rel_tol);
  r.inequality = "li_yau";
  return r;
}

double integrated_harnack_rhs(double tau, double T, double d, double m, double K) {
  const double gap = T - tau;
  const double quad = 0.25 * std::exp(2.0 * K * tau) * (1.0 + 2.0 * K * gap) * d * d / gap;
  const double drift = 0.5 * m * (std::exp(2.0 * K * T) - std::exp(2.0 * K * tau));
  return std::pow(T / tau, 0.5 * m) * std::exp(quad + drift);
}

IntegratedHarnack integrated_harnack_check(const WeightedManifold& M, const HeatState& at_tau,
                                           const HeatState& at_T, std::size_t x, std::size_t y,
                                           double m, double K, double rel_tol) {
  dimension_gap(M, m);
  require_K(K);
  const double tau = at_tau.elapsed(), T = at_T.elapsed();
  require_time(tau);
  if (!(tau < T)) throw ConfigError("tau", "require 0 < tau < T");
  IntegratedHarnack out;
  out.distance = M.distance(x, y);
  out.lhs = at_tau.u[x] / at_T.u[y];
  out.rhs = integrated_harnack_rhs(tau, T, out.distance, m, K);
  out.ok = out.lhs <= out.rhs * (1.0 + rel_tol);
  return out;
}

double sup_bound_prefactor(double K, double t) {
  if (K == 0.0) return 1.0 / t;
  return K / -std::expm1(-K * t);
}

double sup_bound_A(const std::vector<HeatState>& snapshots) {
  double a = 0.0;
  for (const auto& s : snapshots) a = std::max(a, *std::max_element(s.u.begin(), s.u.end()));
  return a * (1.0 + 1e-12);
}

SupBoundReports sup_bound_defect(const WeightedManifold& M, const HeatState& s, double m,
                                 double K, double A, double rel_tol) {
  dimension_gap(M, m);
  require_K(K);
  const double t = s.elapsed();
  require_time(t);
  const double umax = *std::max_element(s.u.begin(), s.u.end());
  if (!(A >= umax)) throw ConfigError("A", "must be >= max u");

  SupBoundReports out;
  const double pre = sup_bound_prefactor(K, t);
  const double pre_variant = K + 1.0 / t;
  const Derivs d = derivs(M, s);
  const std::size_t n = M.size();

  auto init = [&](HarnackReport& r, const char* name, double scale) {
    r.inequality = name;
    r.m = m;
    r.K = K;
    r.t = t;
    r.A = A;
    r.scale = scale;
    r.tol = rel_tol * scale;
    r.defect.resize(n);
  };
  init(out.sharp, "sup_bound", pre * m);
  init(out.variant, "sup_bound_variant", pre_variant * m);
  out.variant_minus_sharp = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const double bracket = m + 4.0 * std::log(A / s.u[i]);
    const double ratio = d.lu[i] / s.u[i];
    const double g = d.gsq[i] / (s.u[i] * s.u[i]);
    out.sharp.defect[i] = pre * bracket - (ratio + g);
    out.variant.defect[i] = pre_variant * bracket - ratio;
    out.variant_minus_sharp =
        std::min(out.variant_minus_sharp, out.variant.defect[i] - out.sharp.defect[i]);
  }
  // The log term adds roundoff of order eps / u times the prefactor.
  Field round_sharp = defect_roundoff(M, s.u, d.lu, d.gsq, 1.0);
  Field round_variant = defect_roundoff(M, s.u, d.lu, Field(n, 0.0), 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_err = 4.0 * kEps * std::max(1.0, std::fabs(std::log(A / s.u[i])));
    round_sharp[i] += pre * log_err;
    round_variant[i] += pre_variant * log_err;
  }
  finish(M, s, round_sharp, out.sharp);
  finish(M, s, round_variant, out.variant);
  return out;
}

KernelDtBounds kernel_dt_log_bounds(const WeightedManifold& M,
                                    const std::vector<HeatState>& snapshots, std::size_t x0,
                                    double m, double K, double rel_tol) {
  dimension_gap(M, m);
  require_K(K);
  KernelDtBounds out;
  out.min_lower_defect = INFINITY;
  out.fitted_C = -INFINITY;
  out.resolved_mass = 1.0;
  const std::size_t n = M.size();
  for (const auto& s : snapshots) {
    const double t = s.elapsed();
    if (!(t > 0.0)) continue;
    const Field lu = witten_laplacian(M, s.u);
    const Field round = defect_roundoff(M, s.u, lu, Field(n, 0.0), 1.0);
    const double bound = m / (2.0 * t) * std::exp(2.0 * K * t);
    const auto w = M.measure_weights();
    double mass = 0.0, resolved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mass += s.u[i] * w[i];
      if (round[i] > 1e-3 * rel_tol * bound) continue;
      resolved += s.u[i] * w[i];
      const double q = lu[i] / s.u[i];
      out.min_lower_defect = std::min(out.min_lower_defect, (q + bound) / bound);
      const double shape = 1.0 + 1.0 / std::sqrt(t) + M.distance(i, x0) / t;
      out.fitted_C = std::max(out.fitted_C, q / (shape * shape));
    }
    out.resolved_mass = std::min(out.resolved_mass, resolved / mass);
  }
  out.lower_ok = std::isfinite(out.min_lower_defect) && out.min_lower_defect >= -rel_tol;
  return out;
}

}  // namespace wlab
