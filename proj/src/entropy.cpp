#include "wlab/entropy.hpp"

#include <cmath>
#include <numbers>

#include "wlab/kernels.hpp"

namespace wlab {

namespace {

void require_positive_time(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("entropy: t must be positive");
}

void require_K(double K) {
  if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("K", "must be finite and >= 0");
}

LogDerivatives log_of(const WeightedManifold& M, const HeatState& s) {
  for (std::size_t i = 0; i < s.u.size(); ++i)
    if (!(s.u[i] > 0.0)) throw PositivityError(i, s.u[i], s.t);
  return log_derivatives(M, s.u);
}

}  // namespace

PhiSeries phi_mK_series(double t, double m, double K) {
  require_positive_time(t);
  require_K(K);
  const double x = 4.0 * K * t;
  double sum = 0.0;
  double a = 1.0;  // x^j / j!
  int j = 0;
  PhiSeries out;
  if (x > 0.0) {
    while (true) {
      ++j;
      a *= x / j;
      const double term = a / j;
      sum += term;
      if (j > x && term <= 1e-17 * sum) break;
    }
    // Tail after j terms: ratio of consecutive terms is below x / (j + 2).
    const double next = a * x / (j + 1) / (j + 1);
    out.remainder = 0.5 * m * next / (1.0 - x / (j + 2));
  }
  out.terms = j;
  out.value = 0.5 * m * (std::log(4.0 * std::numbers::pi * t) + 1.0) + 0.5 * m * sum;
  return out;
}

double phi_mK(double t, double m, double K) { return phi_mK_series(t, m, K).value; }

double phi_mK_prime(double t, double m, double K) {
  require_positive_time(t);
  return m / (2.0 * t) * std::exp(4.0 * K * t);
}

EntropyValues entropy_H(const WeightedManifold& M, const HeatState& s) {
  const LogDerivatives d = log_of(M, s);
  EntropyValues out;
  out.H = -integrate_mu(M, d.f, s.u);
  out.dH_dt = integrate_mu(M, grad_norm_sq(M, d.grad), s.u);
  return out;
}

double entropy_second_derivative(const WeightedManifold& M, const HeatState& s) {
  const LogDerivatives d = log_of(M, s);
  return -2.0 * integrate_mu(M, gamma2(M, d.grad, d.hess), s.u);
}

WValues w_entropy(const WeightedManifold& M, const HeatState& s, double m, double K,
                  MetricFrame frame) {
  dimension_gap(M, m);
  const double t = s.elapsed();
  require_positive_time(t);
  const EntropyValues h = entropy_H(M, s);
  WValues w;
  w.t = t;
  w.H = h.H;
  w.dH_dt = frame.scale * h.dH_dt;
  w.Phi = phi_mK(t, m, K);
  w.dPhi = phi_mK_prime(t, m, K);
  w.H_mK = w.H - w.Phi;
  w.W_mK = w.H_mK + t * (w.dH_dt - w.dPhi);
  return w;
}

double monotonicity_bound(double t, double m, double K) {
  const double kt = K * t;
  return -m / (2.0 * t) * (std::exp(4.0 * kt) * (1.0 + 4.0 * kt) - (1.0 + kt) * (1.0 + kt));
}

WTerms w_derivative_decomposition(const WeightedManifold& M, const HeatState& s, double m,
                                  double K, MetricFrame frame) {
  const double gap = dimension_gap(M, m);
  if (!std::isfinite(gap)) throw ConfigError("m", "the W-entropy formula needs finite m");
  require_K(K);
  const double t = s.elapsed();
  require_positive_time(t);

  const LogDerivatives d = log_of(M, s);
  const auto& df = d.grad;
  const auto& hess = d.hess;
  const Field ric = contract(bakry_emery_tensor(M, m), df);
  const Field dsq = grad_norm_sq(M, df);
  const auto dphi = gradient(M, M.potential());
  const std::size_t n = M.size();
  const double e = frame.scale;
  const double c = 0.5 * K + 0.5 / t;

  Field q1(n), q2(n), q3(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (M.dim() == 1) {
      const double a = e * hess[0][i] + c;
      q1[i] = a * a;
    } else {
      const double a = e * hess[0][i] + c, b = e * hess[1][i], d = e * hess[2][i] + c;
      q1[i] = a * a + 2.0 * b * b + d * d;
    }
    q2[i] = (frame.dlambda + K) * e * dsq[i] + e * e * ric[i];
    if (gap > 0.0) {
      double drift = 0.0;
      for (int ax = 0; ax < M.dim(); ++ax) drift += dphi[ax][i] * df[ax][i];
      const double r = e * drift - gap * (1.0 + K * t) / (2.0 * t);
      q3[i] = r * r;
    }
  }
  WTerms out;
  out.T1 = -2.0 * t * integrate_mu(M, q1, s.u);
  out.T2 = -2.0 * t * integrate_mu(M, q2, s.u);
  out.T3 = gap > 0.0 ? -2.0 * t / gap * integrate_mu(M, q3, s.u) : 0.0;
  out.T4 = monotonicity_bound(t, m, K);
  out.formula = out.T1 + out.T2 + out.T3 + out.T4;
  return out;
}

WTerms classical_w_derivative(const WeightedManifold& M, const HeatState& s, double m) {
  const double n_dim = M.dim();
  if (std::isnan(m) || m < n_dim - 1e-12 || !std::isfinite(m))
    throw ConfigError("m", "must be finite and >= n");
  const double t = s.elapsed();
  require_positive_time(t);
  const SpectralGrid& g = M.spectral();
  const std::size_t n = M.size();
  // Derivatives of log u assembled by hand from raw spectral derivatives of u;
  // nodes under the roundoff floor contribute nothing.
  for (std::size_t i = 0; i < n; ++i)
    if (!(s.u[i] > 0.0)) throw PositivityError(i, s.u[i], s.t);
  const double floor = log_derivative_floor(s.u);
  Field inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[i] = s.u[i] > floor ? 1.0 / s.u[i] : 0.0;
  std::vector<Field> ux(M.dim()), fx(M.dim()), px(M.dim());
  for (int a = 0; a < M.dim(); ++a) {
    ux[a] = g.derivative(s.u, a);
    fx[a].resize(n);
    for (std::size_t i = 0; i < n; ++i) fx[a][i] = ux[a][i] * inv[i];
    px[a] = g.derivative(M.potential(), a);
  }
  auto second = [&](int a, int b) {
    Field out = g.derivative(ux[a], b);
    for (std::size_t i = 0; i < n; ++i) out[i] = out[i] * inv[i] - fx[a][i] * fx[b][i];
    return out;
  };
  const auto w = M.measure_weights();
  double i1 = 0.0, i2 = 0.0, i3 = 0.0;
  const double gap = m - n_dim;
  const bool has_gap = gap >= 1e-12;
  if (!has_gap && !M.potential_is_constant())
    throw ConfigError("m", "m = n is only defined for a constant potential");
  if (M.dim() == 1) {
    const Field fxx = second(0, 0);
    const Field pxx = g.derivative(px[0], 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double hsq = fxx[i] * fxx[i] + fxx[i] / t + 1.0 / (4.0 * t * t);
      double ric = pxx[i] * fx[0][i] * fx[0][i];
      if (has_gap) ric -= px[0][i] * px[0][i] * fx[0][i] * fx[0][i] / gap;
      const double weight = s.u[i] * w[i];
      i1 += hsq * weight;
      i2 += ric * weight;
      if (has_gap) {
        const double r = px[0][i] * fx[0][i] - gap / (2.0 * t);
        i3 += r * r * weight;
      }
    }
  } else {
    const Field fxx = second(0, 0), fxy = second(0, 1), fyy = second(1, 1);
    const Field pxx = g.derivative(px[0], 0), pxy = g.derivative(px[0], 1),
                pyy = g.derivative(px[1], 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double hsq = fxx[i] * fxx[i] + 2.0 * fxy[i] * fxy[i] + fyy[i] * fyy[i] +
                         (fxx[i] + fyy[i]) / t + 2.0 / (4.0 * t * t);
      const double a = fx[0][i], b = fx[1][i];
      double ric = pxx[i] * a * a + 2.0 * pxy[i] * a * b + pyy[i] * b * b;
      const double pf = px[0][i] * a + px[1][i] * b;
      if (has_gap) ric -= pf * pf / gap;
      const double weight = s.u[i] * w[i];
      i1 += hsq * weight;
      i2 += ric * weight;
      if (has_gap) {
        const double r = pf - gap / (2.0 * t);
        i3 += r * r * weight;
      }
    }
  }
  WTerms out;
  out.T1 = -2.0 * t * i1;
  out.T2 = -2.0 * t * i2;
  out.T3 = has_gap ? -2.0 * t / gap * i3 : 0.0;
  out.T4 = 0.0;
  out.formula = out.T1 + out.T2 + out.T3;
  return out;
}

double centred_derivative(double t0, double t1, double t2, double f0, double f1, double f2) {
  const double h1 = t1 - t0, h2 = t2 - t1;
  return -h2 / (h1 * (h1 + h2)) * f0 + (h2 - h1) / (h1 * h2) * f1 + h1 / (h2 * (h1 + h2)) * f2;
}

EntropySeries entropy_series(const WeightedManifold& M, const std::vector<HeatState>& snapshots,
                             double m, double K) {
  EntropySeries series;
  series.m = m;
  series.K = K;
  for (const auto& s : snapshots) {
    if (!(s.elapsed() > 0.0)) continue;
    const WValues w = w_entropy(M, s, m, K);
    EntropyRow row;
    row.t = w.t;
    row.H = w.H;
    row.dH_dt = w.dH_dt;
    row.d2H_dt2 = entropy_second_derivative(M, s);
    row.Phi = w.Phi;
    row.H_mK = w.H_mK;
    row.W_mK = w.W_mK;
    row.terms = w_derivative_decomposition(M, s, m, K);
    row.bound = row.terms.T4;
    series.rows.push_back(row);
  }
  auto& r = series.rows;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    r[i].dW_dt_numeric =
        centred_derivative(r[i - 1].t, r[i].t, r[i + 1].t, r[i - 1].W_mK, r[i].W_mK, r[i + 1].W_mK);
    r[i].residual = r[i].dW_dt_numeric - r[i].terms.formula;
  }
  return series;
}

bool w_monotonicity_check(const EntropySeries& series, double rel_slack) {
  for (const auto& row : series.rows) {
    const auto& T = row.terms;
    const double slack =
        rel_slack * (1.0 + std::fabs(T.T1) + std::fabs(T.T2) + std::fabs(T.T3) + std::fabs(T.T4));
    if (!(T.formula <= row.bound + slack)) return false;
  }
  return true;
}

TildeComparison tilde_w_comparison(double m, double K, double t) {
  require_positive_time(t);
  require_K(K);
  const double log_part = 0.5 * m * (1.0 + std::log(4.0 * std::numbers::pi * t));
  const double kt = K * t;
  TildeComparison out;
  const double phi = phi_mK(t, m, K);
  out.Psi = phi - (log_part + 0.5 * m * kt * (1.0 + kt / 6.0));
  // d/dt(t Phi) = Phi + (m/2) e^{4Kt};  d/dt(t B) = (m/2)(1 + log 4 pi t) + m/2 + mKt + m K^2 t^2 / 4
  out.d_dt_tPsi = (phi + 0.5 * m * std::exp(4.0 * kt)) -
                  (log_part + 0.5 * m + m * kt + 0.25 * m * kt * kt);

  // Second derivative of t Psi term by term:
  // (m/2) sum_{j>=1} (4K)^j (j+1) t^{j-1} / j!  -  mK  -  m K^2 t / 2
  const double x = 4.0 * kt;
  double sum = 0.0;
  double a = 1.0;
  for (int j = 1; x > 0.0; ++j) {
    a *= x / j;
    const double term = a * (j + 1);
    sum += term;
    if (j > x && term <= 1e-18 * sum) break;
  }
  out.d2_dt2_tPsi = 0.5 * m * sum / t - m * K - 0.5 * m * K * kt;
  out.identity_rhs = monotonicity_bound(t, m, K) * -1.0;
  out.identity_residual =
      std::fabs(out.d2_dt2_tPsi - out.identity_rhs) / (1.0 + std::fabs(out.identity_rhs));
  return out;
}

double tilde_w(const WeightedManifold& M, const HeatState& s, double m, double K) {
  const double t = s.elapsed();
  require_positive_time(t);
  const EntropyValues h = entropy_H(M, s);
  const double kt = K * t;
  const double B = 0.5 * m * (1.0 + std::log(4.0 * std::numbers::pi * t)) +
                   0.5 * m * kt * (1.0 + kt / 6.0);
  const double dB = m / (2.0 * t) + 0.5 * m * K + m * K * kt / 6.0;
  return (h.H - B) + t * (h.dH_dt - dB);
}

}  // namespace wlab
