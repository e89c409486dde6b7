#pragma once

// Harnack-type inequalities as pointwise defect fields (defect = rhs - lhs; a
// non-negative defect certifies the inequality at that node).

#include <string>
#include <vector>

#include "wlab/heatflow.hpp"

namespace wlab {

struct HarnackReport {
  std::string inequality;
  double m = 0.0;
  double K = 0.0;
  double t = 0.0;  // elapsed time of the solution
  double A = NAN;
  double scale = 1.0;  // natural size of the rhs; tol is relative to it
  double tol = 0.0;    // absolute tolerance actually applied
  Field defect;
  // Nodes where the a-priori roundoff estimate of the defect is below 1e-3 * tol.
  std::vector<char> resolved;
  double resolved_mass = 1.0;  // mu-mass of u on resolved nodes over the total mass
  double min_defect = 0.0;     // over resolved nodes
  std::size_t argmin = 0;
  bool ok = false;
};

// Roundoff bound for c0 + c1 Lu/u - |grad u|^2/u^2 evaluated by spectral
// differentiation of u; `safety` multiplies machine epsilon.
Field defect_roundoff(const WeightedManifold& M, const Field& u, const Field& lu,
                      const Field& grad_sq, double c1);

HarnackReport hamilton_harnack_defect(const WeightedManifold& M, const HeatState& s, double m,
                                      double K, double rel_tol = 1e-6);
HarnackReport li_yau_defect(const WeightedManifold& M, const HeatState& s, double m,
                            double rel_tol = 1e-6);

struct IntegratedHarnack {
  double lhs = 0.0;
  double rhs = 0.0;
  double distance = 0.0;
  bool ok = false;
};

// rhs of the integrated inequality for u(x, tau) / u(y, T).
double integrated_harnack_rhs(double tau, double T, double d, double m, double K);

IntegratedHarnack integrated_harnack_check(const WeightedManifold& M, const HeatState& at_tau,
                                           const HeatState& at_T, std::size_t x, std::size_t y,
                                           double m, double K, double rel_tol = 1e-6);

// K / (1 - e^{-Kt}), with the K -> 0 limit 1/t.
double sup_bound_prefactor(double K, double t);

struct SupBoundReports {
  HarnackReport sharp;    // K/(1-e^{-Kt}) [m + 4 log(A/u)] - (Lu/u + |grad u/u|^2)
  HarnackReport variant;  // (K + 1/t) [m + 4 log(A/u)] - Lu/u
  // min over nodes of variant.defect - sharp.defect
  double variant_minus_sharp = 0.0;
};

SupBoundReports sup_bound_defect(const WeightedManifold& M, const HeatState& s, double m,
                                 double K, double A, double rel_tol = 1e-6);

// max over snapshots of max u, times (1 + 1e-12).
double sup_bound_A(const std::vector<HeatState>& snapshots);

struct KernelDtBounds {
  double min_lower_defect = 0.0;  // min of dt log u + (m/2t) e^{2Kt}, relative to (m/2t) e^{2Kt}
  double fitted_C = 0.0;          // max of dt log u / (1 + 1/sqrt t + d/t)^2
  bool lower_ok = false;
  double resolved_mass = 1.0;
};

KernelDtBounds kernel_dt_log_bounds(const WeightedManifold& M,
                                    const std::vector<HeatState>& snapshots, std::size_t x0,
                                    double m, double K, double rel_tol = 1e-6);

}  // namespace wlab
