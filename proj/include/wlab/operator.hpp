#pragma once

// Discrete differential operators on a WeightedManifold.

#include <span>
#include <vector>

#include "wlab/geometry.hpp"

namespace wlab {

using Field = std::vector<double>;
// One component per axis.
using VectorField = std::vector<Field>;
// Symmetric tensor stored as (xx) or (xx, xy, yy), as in bakry_emery_tensor.
using SymTensorField = std::vector<Field>;

VectorField gradient(const WeightedManifold& M, std::span<const double> f);
SymTensorField hessian(const WeightedManifold& M, std::span<const double> f);

// L f = e^{phi} div(e^{-phi} grad f). Built in divergence form so that it is
// self-adjoint for the mu inner product and kills constants.
Field witten_laplacian(const WeightedManifold& M, std::span<const double> f);
// Delta f - grad phi . grad f, assembled directly. Cross-check only.
Field drift_laplacian(const WeightedManifold& M, std::span<const double> f);

Field grad_norm_sq(const WeightedManifold& M, const VectorField& grad);
Field hessian_norm_sq(const WeightedManifold& M, const SymTensorField& hess);
// T(a, a) per node for a symmetric tensor T and vector field a.
Field contract(const SymTensorField& T, const VectorField& a);

// |Hess f|^2 + Ric(L)(grad f, grad f), Ric(L) = Hess phi on flat models.
Field gamma2(const WeightedManifold& M, std::span<const double> f);
// Same, from a gradient and Hessian already in hand.
Field gamma2(const WeightedManifold& M, const VectorField& grad, const SymTensorField& hess);

// Derivatives of f = log u built from derivatives of u. Spectral differentiation of
// log u itself rings where u is tiny (the cut locus of a kernel); u stays smooth there.
// Requires u > 0 everywhere; nodes at or below log_derivative_floor(u) get zero derivatives.
double log_derivative_floor(std::span<const double> u);
struct LogDerivatives {
  Field f;
  VectorField grad;
  SymTensorField hess;
};
LogDerivatives log_derivatives(const WeightedManifold& M, std::span<const double> u);

double integrate_mu(const WeightedManifold& M, std::span<const double> f);
// int f u dmu
double integrate_mu(const WeightedManifold& M, std::span<const double> f,
                    std::span<const double> u);

struct BochnerResidual {
  Field residual;
  double max_abs = 0.0;
  double scale = 1.0;     // 1 + largest node magnitude among the four terms
  double relative = 0.0;  // max_abs / scale
};

// L|grad f|^2 - 2<grad f, grad Lf> - 2|Hess f|^2 - 2 Ric(L)(grad f, grad f).
BochnerResidual bochner_residual(const WeightedManifold& M, std::span<const double> f);

struct TraceDefects {
  double laplacian = 0.0;  // min_x |Hess f|^2 - (Delta f)^2 / n
  double witten = 0.0;     // min_x |Hess f|^2 - (Lf)^2 / m + (grad phi . grad f)^2 / (m - n)
};
TraceDefects trace_defects(const WeightedManifold& M, std::span<const double> f, double m);

}  // namespace wlab
