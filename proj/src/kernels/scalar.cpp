#include <cmath>

#include "kernels_impl.hpp"

namespace wlab::kernels::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot3_scalar(const double* a, const double* b, const double* c, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i] * c[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_scalar(const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void harnack_scalar(double c0, double c1, const double* lu, const double* grad_sq,
                    const double* u, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = lu[i] / u[i];
    const double g = grad_sq[i] / (u[i] * u[i]);
    out[i] = (c0 + c1 * ratio) - g;
  }
}

double max_abs_scalar(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(a[i]));
  return m;
}

}  // namespace

const Table kScalarTable{Isa::scalar, dot_scalar,  dot3_scalar,    axpy_scalar,
                         xpby_scalar, mul_scalar,  harnack_scalar, max_abs_scalar};

}  // namespace wlab::kernels::detail
