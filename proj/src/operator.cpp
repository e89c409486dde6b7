#include "wlab/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wlab/kernels.hpp"

namespace wlab {

VectorField gradient(const WeightedManifold& M, std::span<const double> f) {
  return M.spectral().gradient(f);
}

SymTensorField hessian(const WeightedManifold& M, std::span<const double> f) {
  const SpectralGrid& g = M.spectral();
  const auto grad = g.gradient(f);
  if (M.dim() == 1) return {g.derivative(grad[0], 0)};
  return {g.derivative(grad[0], 0), g.derivative(grad[0], 1), g.derivative(grad[1], 1)};
}

Field witten_laplacian(const WeightedManifold& M, std::span<const double> f) {
  const auto rho = M.density();
  auto flux = M.spectral().gradient(f);
  for (auto& c : flux) kernels::mul(c, rho, c);
  Field out = M.spectral().divergence(flux);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= rho[i];
  return out;
}

Field drift_laplacian(const WeightedManifold& M, std::span<const double> f) {
  const SpectralGrid& g = M.spectral();
  const auto grad = g.gradient(f);
  const auto dphi = g.gradient(M.potential());
  Field out(M.size(), 0.0);
  for (int a = 0; a < M.dim(); ++a) {
    const Field second = g.derivative(grad[a], a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += second[i] - dphi[a][i] * grad[a][i];
  }
  return out;
}

Field grad_norm_sq(const WeightedManifold& M, const VectorField& grad) {
  Field out(M.size(), 0.0);
  for (const auto& c : grad)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i] * c[i];
  return out;
}

Field hessian_norm_sq(const WeightedManifold& M, const SymTensorField& h) {
  Field out(M.size());
  if (h.size() == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = h[0][i] * h[0][i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = h[0][i] * h[0][i] + 2.0 * h[1][i] * h[1][i] + h[2][i] * h[2][i];
  }
  return out;
}

Field contract(const SymTensorField& T, const VectorField& a) {
  Field out(a[0].size());
  if (T.size() == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = T[0][i] * a[0][i] * a[0][i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = T[0][i] * a[0][i] * a[0][i] + 2.0 * T[1][i] * a[0][i] * a[1][i] +
               T[2][i] * a[1][i] * a[1][i];
  }
  return out;
}

Field gamma2(const WeightedManifold& M, std::span<const double> f) {
  return gamma2(M, gradient(M, f), hessian(M, f));
}

Field gamma2(const WeightedManifold& M, const VectorField& grad, const SymTensorField& hess) {
  Field out = hessian_norm_sq(M, hess);
  const Field ric = contract(hessian(M, M.potential()), grad);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += ric[i];
  return out;
}

double log_derivative_floor(std::span<const double> u) {
  return 256.0 * std::numeric_limits<double>::epsilon() * kernels::max_abs(u);
}

LogDerivatives log_derivatives(const WeightedManifold& M, std::span<const double> u) {
  LogDerivatives out;
  out.grad = gradient(M, u);
  out.hess = hessian(M, u);
  const std::size_t n = u.size();
  out.f.resize(n);
  // Below the floor the spectral derivatives of u are pure roundoff and dividing
  // by u amplifies it without bound; such nodes carry derivative zero.
  const double floor = log_derivative_floor(u);
  for (std::size_t i = 0; i < n; ++i) {
    out.f[i] = std::log(u[i]);
    if (u[i] <= floor) {
      for (auto& c : out.grad) c[i] = 0.0;
      for (auto& h : out.hess) h[i] = 0.0;
      continue;
    }
    const double inv = 1.0 / u[i];
    for (auto& c : out.grad) c[i] *= inv;
    for (auto& h : out.hess) h[i] *= inv;
    // hess -= grad (x) grad, after grad is already divided by u
    if (out.grad.size() == 1) {
      out.hess[0][i] -= out.grad[0][i] * out.grad[0][i];
    } else {
      const double a = out.grad[0][i], b = out.grad[1][i];
      out.hess[0][i] -= a * a;
      out.hess[1][i] -= a * b;
      out.hess[2][i] -= b * b;
    }
  }
  return out;
}

double integrate_mu(const WeightedManifold& M, std::span<const double> f) {
  return kernels::dot(f, M.measure_weights());
}

double integrate_mu(const WeightedManifold& M, std::span<const double> f,
                    std::span<const double> u) {
  return kernels::dot3(f, u, M.measure_weights());
}

BochnerResidual bochner_residual(const WeightedManifold& M, std::span<const double> f) {
  const auto grad = gradient(M, f);
  const Field gsq = grad_norm_sq(M, grad);
  const Field l_gsq = witten_laplacian(M, gsq);
  const auto grad_lf = gradient(M, witten_laplacian(M, f));
  const Field hsq = hessian_norm_sq(M, hessian(M, f));
  const Field ric = contract(hessian(M, M.potential()), grad);

  BochnerResidual out;
  out.residual.resize(M.size());
  double biggest = 0.0;
  for (std::size_t i = 0; i < M.size(); ++i) {
    double cross = 0.0;
    for (int a = 0; a < M.dim(); ++a) cross += grad[a][i] * grad_lf[a][i];
    const double t1 = l_gsq[i], t2 = 2.0 * cross, t3 = 2.0 * hsq[i], t4 = 2.0 * ric[i];
    out.residual[i] = t1 - t2 - t3 - t4;
    biggest = std::max({biggest, std::fabs(t1), std::fabs(t2), std::fabs(t3), std::fabs(t4)});
  }
  out.max_abs = kernels::max_abs(out.residual);
  out.scale = 1.0 + biggest;
  out.relative = out.max_abs / out.scale;
  return out;
}

TraceDefects trace_defects(const WeightedManifold& M, std::span<const double> f, double m) {
  const double gap = dimension_gap(M, m);
  const double n = M.dim();
  const auto grad = gradient(M, f);
  const auto hess = hessian(M, f);
  const Field hsq = hessian_norm_sq(M, hess);
  const auto dphi = gradient(M, M.potential());
  TraceDefects out{INFINITY, INFINITY};
  for (std::size_t i = 0; i < M.size(); ++i) {
    const double lap = M.dim() == 1 ? hess[0][i] : hess[0][i] + hess[2][i];
    double drift = 0.0;
    for (int a = 0; a < M.dim(); ++a) drift += dphi[a][i] * grad[a][i];
    out.laplacian = std::min(out.laplacian, hsq[i] - lap * lap / n);
    const double lf = lap - drift;
    double w = hsq[i] - lf * lf / m;
    if (std::isfinite(gap) && gap > 0.0) w += drift * drift / gap;
    out.witten = std::min(out.witten, w);
  }
  return out;
}

}  // namespace wlab
