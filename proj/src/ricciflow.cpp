#include "wlab/ricciflow.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "wlab/kernels.hpp"

namespace wlab {

std::string to_string(FlowFamily family) {
  switch (family) {
    case FlowFamily::static_flow: return "static";
    case FlowFamily::constant_rate: return "constant_rate";
    case FlowFamily::sinusoidal: return "sinusoidal";
  }
  return "unknown";
}

FlowFamily parse_flow_family(const std::string& name) {
  if (name == "static") return FlowFamily::static_flow;
  if (name == "constant_rate") return FlowFamily::constant_rate;
  if (name == "sinusoidal") return FlowFamily::sinusoidal;
  throw ConfigError("flow.family", "unknown flow family '" + name + "'");
}

bool FlowSpec::is_static() const {
  switch (params_.family) {
    case FlowFamily::static_flow: return true;
    case FlowFamily::constant_rate: return params_.rate == 0.0;
    case FlowFamily::sinusoidal: return params_.amplitude == 0.0 || params_.omega == 0.0;
  }
  return false;
}

double FlowSpec::lambda(double t) const {
  const auto& p = params_;
  switch (p.family) {
    case FlowFamily::static_flow: return p.lambda0;
    case FlowFamily::constant_rate: return p.lambda0 + p.rate * t;
    case FlowFamily::sinusoidal: return p.lambda0 + p.amplitude * (1.0 - std::cos(p.omega * t));
  }
  return p.lambda0;
}

double FlowSpec::dlambda(double t) const {
  const auto& p = params_;
  switch (p.family) {
    case FlowFamily::static_flow: return 0.0;
    case FlowFamily::constant_rate: return p.rate;
    case FlowFamily::sinusoidal: return p.amplitude * p.omega * std::sin(p.omega * t);
  }
  return 0.0;
}

double FlowSpec::rate_factor(double t) const { return std::exp(-2.0 * lambda(t)); }

double FlowSpec::time_change(double t) const {
  const auto& p = params_;
  if (t == 0.0) return 0.0;
  switch (p.family) {
    case FlowFamily::static_flow: return std::exp(-2.0 * p.lambda0) * t;
    case FlowFamily::constant_rate:
      if (p.rate == 0.0) return std::exp(-2.0 * p.lambda0) * t;
      return std::exp(-2.0 * p.lambda0) * -std::expm1(-2.0 * p.rate * t) / (2.0 * p.rate);
    case FlowFamily::sinusoidal: {
      auto f = [this](double s) { return rate_factor(s); };
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, t, 20, 1e-15);
    }
  }
  return t;
}

Field FlowSpec::potential_at(double t) const {
  const double shift = base_.dim() * (lambda(t) - lambda(0.0));
  Field phi(base_.potential().begin(), base_.potential().end());
  for (double& v : phi) v += shift;
  return phi;
}

Field FlowSpec::measure_at(double t) const {
  const Field phi = potential_at(t);
  const double volume = std::exp(base_.dim() * lambda(t)) * base_.cell_volume();
  Field w(phi.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(-phi[i]) * volume;
  return w;
}

MetricFrame FlowSpec::frame(double t) const { return {rate_factor(t), dlambda(t)}; }

double measure_drift(const FlowSpec& flow, const std::vector<double>& times) {
  const Field w0 = flow.measure_at(0.0);
  double drift = 0.0;
  for (double t : times) {
    const Field w = flow.measure_at(t);
    for (std::size_t i = 0; i < w.size(); ++i) drift = std::max(drift, std::fabs(w[i] / w0[i] - 1.0));
  }
  return drift;
}

FlowSpec make_flow(const WeightedManifold& base, const FlowParams& params) {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(params.lambda0)) throw ConfigError("flow.lambda0", "must be finite");
  if (!finite(params.rate)) throw ConfigError("flow.rate", "must be finite");
  if (!finite(params.amplitude)) throw ConfigError("flow.amplitude", "must be finite");
  if (!finite(params.omega)) throw ConfigError("flow.omega", "must be finite");
  if (!(params.horizon > 0.0) || !finite(params.horizon))
    throw ConfigError("flow.horizon", "must be positive and finite");
  FlowSpec flow(base, params);
  const double T = params.horizon;
  for (double t : {0.0, 0.5 * T, T})
    if (!finite(flow.lambda(t)) || !finite(flow.dlambda(t)) || !finite(flow.rate_factor(t)))
      throw ConfigError("flow", "lambda must stay finite and C^1 on [0, T]");
  const double drift = measure_drift(flow, {0.0, 0.5 * T, T});
  if (drift > 1e-14)
    throw std::runtime_error("flow: measure not invariant (drift " + std::to_string(drift) + ")");
  return flow;
}

MarginReport super_ricci_flow_margin(const FlowSpec& flow, double m, double K,
                                     const std::vector<double>& times, double tol) {
  if (!(K >= 0.0) && !(K < 0.0)) throw ConfigError("K", "must be a number");
  const CurvatureField ric = ricci_bakry_emery(flow.base(), m);
  MarginReport out;
  out.min_value = INFINITY;
  for (double t : times) {
    const double dl = flow.dlambda(t), e = flow.rate_factor(t);
    out.field.resize(ric.values.size());
    for (std::size_t i = 0; i < ric.values.size(); ++i) {
      out.field[i] = dl + e * ric.values[i] + K;
      if (out.field[i] < out.min_value) {
        out.min_value = out.field[i];
        out.argmin = i;
        out.argmin_t = t;
      }
    }
  }
  out.ok = out.min_value >= -tol;
  return out;
}

double fit_flow_K(const FlowSpec& flow, double m, const std::vector<double>& times) {
  const double ric_min = ricci_bakry_emery(flow.base(), m).min_value;
  double K = 0.0;
  for (double t : times) K = std::max(K, -(flow.dlambda(t) + flow.rate_factor(t) * ric_min));
  return K;
}

Evolution evolve_heat_on_flow(const FlowSpec& flow, const HeatState& u0,
                              const std::vector<double>& times, const EvolveOptions& opt) {
  return evolve(flow.base(), u0, times, opt, [&flow](double t) { return flow.rate_factor(t); });
}

WValues w_entropy_on_flow(const FlowSpec& flow, const HeatState& s, double m, double K) {
  return w_entropy(flow.base(), s, m, K, flow.frame(s.t));
}

WTerms w_decomposition_on_flow(const FlowSpec& flow, const HeatState& s, double m, double K) {
  return w_derivative_decomposition(flow.base(), s, m, K, flow.frame(s.t));
}

double centred_second_derivative(double t0, double t1, double t2, double f0, double f1,
                                 double f2) {
  const double h1 = t1 - t0, h2 = t2 - t1;
  return 2.0 * (f0 / (h1 * (h1 + h2)) - f1 / (h1 * h2) + f2 / (h2 * (h1 + h2)));
}

std::vector<DissipationRow> entropy_dissipation_on_flow(const FlowSpec& flow,
                                                        const std::vector<HeatState>& snapshots) {
  const WeightedManifold& M = flow.base();
  std::vector<DissipationRow> rows;
  for (const auto& s : snapshots) {
    for (std::size_t i = 0; i < s.u.size(); ++i)
      if (!(s.u[i] > 0.0)) throw PositivityError(i, s.u[i], s.t);
    const LogDerivatives d = log_derivatives(M, s.u);
    const Field& f = d.f;
    const MetricFrame fr = flow.frame(s.t);
    const Field dsq = grad_norm_sq(M, d.grad);
    const Field g2 = gamma2(M, d.grad, d.hess);
    Field q(f.size());
    for (std::size_t i = 0; i < q.size(); ++i)
      q[i] = fr.scale * fr.scale * g2[i] + fr.dlambda * fr.scale * dsq[i];
    DissipationRow row;
    row.t = s.t;
    row.H = -integrate_mu(M, f, s.u);
    row.dH_dt = fr.scale * integrate_mu(M, dsq, s.u);
    row.d2H_dt2 = -2.0 * integrate_mu(M, q, s.u);
    rows.push_back(row);
  }
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    auto& r = rows[i];
    const auto &a = rows[i - 1], &b = rows[i + 1];
    r.dH_numeric = centred_derivative(a.t, r.t, b.t, a.H, r.H, b.H);
    r.d2H_numeric = centred_second_derivative(a.t, r.t, b.t, a.H, r.H, b.H);
    r.residual1 = std::fabs(r.dH_numeric - r.dH_dt) / std::max(std::fabs(r.dH_dt), 1e-300);
    r.residual2 = std::fabs(r.d2H_numeric - r.d2H_dt2) / std::max(std::fabs(r.d2H_dt2), 1e-300);
  }
  return rows;
}

EntropySeries flow_entropy_series(const FlowSpec& flow, const std::vector<HeatState>& snapshots,
                                  double m, double K) {
  const WeightedManifold& M = flow.base();
  const CurvatureField ric = ricci_bakry_emery(M, m);
  EntropySeries series;
  series.m = m;
  series.K = K;
  for (const auto& s : snapshots) {
    if (!(s.elapsed() > 0.0)) continue;
    const WValues w = w_entropy_on_flow(flow, s, m, K);
    EntropyRow row;
    row.t = w.t;
    row.H = w.H;
    row.dH_dt = w.dH_dt;
    row.Phi = w.Phi;
    row.H_mK = w.H_mK;
    row.W_mK = w.W_mK;
    row.terms = w_decomposition_on_flow(flow, s, m, K);
    row.bound = row.terms.T4;
    row.d2H_dt2 = entropy_dissipation_on_flow(flow, {s}).front().d2H_dt2;
    row.margin = flow.dlambda(s.t) + flow.rate_factor(s.t) * ric.min_value + K;
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

}  // namespace wlab
