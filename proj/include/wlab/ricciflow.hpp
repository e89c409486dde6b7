#pragma once

// Conformal flows g(t) = e^{2 lambda(t)} g0 with lambda constant in space, coupled
// to phi(t) = phi0 + n (lambda(t) - lambda(0)) so that mu stays fixed.

#include <string>
#include <vector>

#include "wlab/entropy.hpp"

namespace wlab {

enum class FlowFamily { static_flow, constant_rate, sinusoidal };

std::string to_string(FlowFamily family);
FlowFamily parse_flow_family(const std::string& name);

struct FlowParams {
  FlowFamily family = FlowFamily::static_flow;
  double lambda0 = 0.0;
  double rate = 0.0;       // constant_rate: lambda = lambda0 + rate t
  double amplitude = 0.0;  // sinusoidal: lambda = lambda0 + amplitude (1 - cos(omega t))
  double omega = 1.0;
  double horizon = 1.0;
};

class FlowSpec {
 public:
  const WeightedManifold& base() const { return base_; }
  const FlowParams& params() const { return params_; }
  double horizon() const { return params_.horizon; }
  bool is_static() const;

  double lambda(double t) const;
  double dlambda(double t) const;
  // e^{-2 lambda(t)}: L_t = rate_factor(t) L_0.
  double rate_factor(double t) const;
  // s(t) = int_0^t e^{-2 lambda}: the base-flow time reached at flow time t.
  double time_change(double t) const;

  Field potential_at(double t) const;
  // e^{-phi(t)} sqrt det g(t) * cell volume
  Field measure_at(double t) const;
  MetricFrame frame(double t) const;

 private:
  friend FlowSpec make_flow(const WeightedManifold& base, const FlowParams& params);
  FlowSpec(WeightedManifold base, FlowParams params)
      : base_(std::move(base)), params_(params) {}
  WeightedManifold base_;
  FlowParams params_;
};

// Validates the family and checks mu(t) against mu(0) node-wise at 0, T/2, T.
FlowSpec make_flow(const WeightedManifold& base, const FlowParams& params);

// Largest relative deviation of mu(t) from mu(0) over the given times.
double measure_drift(const FlowSpec& flow, const std::vector<double>& times);

struct MarginReport {
  Field field;  // at the last sampled time
  double min_value = 0.0;
  std::size_t argmin = 0;
  double argmin_t = 0.0;
  bool ok = false;
};

// Smallest eigenvalue, relative to g(t), of (1/2) dg/dt + Ric_{m,n}(L) + K g.
MarginReport super_ricci_flow_margin(const FlowSpec& flow, double m, double K,
                                     const std::vector<double>& times, double tol = 1e-10);

// Smallest K >= 0 making the margin non-negative over the sampled times.
double fit_flow_K(const FlowSpec& flow, double m, const std::vector<double>& times);

Evolution evolve_heat_on_flow(const FlowSpec& flow, const HeatState& u0,
                              const std::vector<double>& times, const EvolveOptions& opt = {});

WValues w_entropy_on_flow(const FlowSpec& flow, const HeatState& s, double m, double K);
WTerms w_decomposition_on_flow(const FlowSpec& flow, const HeatState& s, double m, double K);

struct DissipationRow {
  double t = 0.0;
  double H = 0.0;
  double dH_dt = 0.0;
  double d2H_dt2 = 0.0;
  double dH_numeric = NAN;
  double d2H_numeric = NAN;
  double residual1 = NAN;  // relative, interior rows only
  double residual2 = NAN;
};

// First and second dissipation identities along the flow, with centred
// differences of H across neighbouring snapshots.
std::vector<DissipationRow> entropy_dissipation_on_flow(const FlowSpec& flow,
                                                        const std::vector<HeatState>& snapshots);

EntropySeries flow_entropy_series(const FlowSpec& flow, const std::vector<HeatState>& snapshots,
                                  double m, double K);

// Non-uniform three-point second difference at the middle point.
double centred_second_derivative(double t0, double t1, double t2, double f0, double f1,
                                 double f2);

}  // namespace wlab
