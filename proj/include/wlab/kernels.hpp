#pragma once

// Pointwise and reduction kernels over node-sampled fields.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is chosen once at start-up from CPUID; the
// environment variable WLAB_SIMD=scalar forces the reference path.
// Elementwise kernels are bit-identical across variants (no FMA contraction);
// reductions differ only by summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace wlab::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct Table {
  Isa isa;
  // sum_i a_i b_i
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i a_i b_i c_i
  double (*dot3)(const double* a, const double* b, const double* c, std::size_t n);
  // y += alpha x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = x + beta y
  void (*xpby)(const double* x, double beta, double* y, std::size_t n);
  // out = a * b
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out = c0 + c1 * lu / u - grad_sq / (u * u)
  void (*harnack)(double c0, double c1, const double* lu, const double* grad_sq,
                  const double* u, double* out, std::size_t n);
  // max_i |a_i|
  double (*max_abs)(const double* a, std::size_t n);
};

const Table& scalar_table();
// nullptr when the binary or the CPU lacks AVX2/FMA.
const Table* avx2_table();

const Table& active();
// Overrides the dispatch choice; returns false if the ISA is unavailable.
bool force(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double dot3(std::span<const double> a, std::span<const double> b,
                   std::span<const double> c) {
  return active().dot3(a.data(), b.data(), c.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void xpby(std::span<const double> x, double beta, std::span<double> y) {
  active().xpby(x.data(), beta, y.data(), x.size());
}
inline void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().mul(a.data(), b.data(), out.data(), a.size());
}
inline double max_abs(std::span<const double> a) {
  return active().max_abs(a.data(), a.size());
}

}  // namespace wlab::kernels
