#include "wlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace wlab {

namespace {
// The FFTW planner is not re-entrant; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct SpectralGrid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

SpectralGrid::SpectralGrid(std::vector<int> sizes, std::vector<double> periods)
    : sizes_(std::move(sizes)), periods_(std::move(periods)), plans_(std::make_unique<Plans>()) {
  if (sizes_.empty() || sizes_.size() > 2 || sizes_.size() != periods_.size())
    throw std::invalid_argument("SpectralGrid: 1 or 2 axes with matching periods required");
  for (int n : sizes_)
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("SpectralGrid: sizes must be even");

  const int d = dim();
  const int last = sizes_.back();
  size_ = 1;
  for (int n : sizes_) size_ *= static_cast<std::size_t>(n);
  spectrum_size_ = (d == 1) ? static_cast<std::size_t>(last / 2 + 1)
                            : static_cast<std::size_t>(sizes_[0]) * (last / 2 + 1);

  wavenumbers_.assign(d, std::vector<double>(spectrum_size_, 0.0));
  nyquist_.assign(d, std::vector<char>(spectrum_size_, 0));
  upper_band_.assign(d, std::vector<char>(spectrum_size_, 0));
  multiplicity_.assign(spectrum_size_, 1.0);
  const int half = last / 2 + 1;
  for (std::size_t s = 0; s < spectrum_size_; ++s) {
    const int iy = static_cast<int>(s % half);
    const int ix = static_cast<int>(s / half);
    multiplicity_[s] = (iy == 0 || iy == last / 2) ? 1.0 : 2.0;
    const int ky = iy;
    const double scale_last = 2.0 * std::numbers::pi / periods_.back();
    wavenumbers_[d - 1][s] = scale_last * ky;
    nyquist_[d - 1][s] = (ky == last / 2);
    upper_band_[d - 1][s] = (4 * ky > last);
    if (d == 2) {
      const int nx = sizes_[0];
      const int kx = (ix <= nx / 2) ? ix : ix - nx;
      wavenumbers_[0][s] = 2.0 * std::numbers::pi / periods_[0] * kx;
      nyquist_[0][s] = (ix == nx / 2);
      upper_band_[0][s] = (4 * std::abs(kx) > nx);
    }
  }

  std::vector<double> real(size_);
  std::vector<Complex> spec(spectrum_size_);
  auto* rp = real.data();
  auto* cp = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  if (d == 1) {
    plans_->r2c = fftw_plan_dft_r2c_1d(sizes_[0], rp, cp, flags);
    plans_->c2r = fftw_plan_dft_c2r_1d(sizes_[0], cp, rp, flags);
  } else {
    plans_->r2c = fftw_plan_dft_r2c_2d(sizes_[0], sizes_[1], rp, cp, flags);
    plans_->c2r = fftw_plan_dft_c2r_2d(sizes_[0], sizes_[1], cp, rp, flags);
  }
  if (!plans_->r2c || !plans_->c2r) throw std::runtime_error("SpectralGrid: FFTW planning failed");
}

SpectralGrid::~SpectralGrid() = default;

void SpectralGrid::forward(std::span<const double> in, std::span<Complex> out) const {
  if (in.size() != size_ || out.size() != spectrum_size_)
    throw std::invalid_argument("SpectralGrid::forward: size mismatch");
  // r2c does not modify its input under FFTW_ESTIMATE; the cast is required by the C API.
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void SpectralGrid::inverse(std::span<const Complex> in, std::span<double> out) const {
  if (in.size() != spectrum_size_ || out.size() != size_)
    throw std::invalid_argument("SpectralGrid::inverse: size mismatch");
  std::vector<Complex> scratch(in.begin(), in.end());  // c2r destroys its input
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double inv_n = 1.0 / static_cast<double>(size_);
  for (double& v : out) v *= inv_n;
}

std::vector<Complex> SpectralGrid::transform(std::span<const double> f) const {
  std::vector<Complex> spec(spectrum_size_);
  forward(f, spec);
  return spec;
}

void SpectralGrid::derivative(std::span<const double> f, int axis, std::span<double> out) const {
  auto spec = transform(f);
  const auto& kw = wavenumbers_[axis];
  const auto& ny = nyquist_[axis];
  for (std::size_t s = 0; s < spectrum_size_; ++s)
    spec[s] = ny[s] ? Complex{} : spec[s] * Complex(0.0, kw[s]);
  inverse(spec, out);
}

std::vector<double> SpectralGrid::derivative(std::span<const double> f, int axis) const {
  std::vector<double> out(size_);
  derivative(f, axis, out);
  return out;
}

std::vector<std::vector<double>> SpectralGrid::gradient(std::span<const double> f) const {
  const auto spec = transform(f);
  std::vector<std::vector<double>> grad(dim(), std::vector<double>(size_));
  std::vector<Complex> work(spectrum_size_);
  for (int a = 0; a < dim(); ++a) {
    const auto& kw = wavenumbers_[a];
    const auto& ny = nyquist_[a];
    for (std::size_t s = 0; s < spectrum_size_; ++s)
      work[s] = ny[s] ? Complex{} : spec[s] * Complex(0.0, kw[s]);
    inverse(work, grad[a]);
  }
  return grad;
}

std::vector<double> SpectralGrid::divergence(std::span<const std::vector<double>> flux) const {
  if (static_cast<int>(flux.size()) != dim())
    throw std::invalid_argument("SpectralGrid::divergence: one flux component per axis");
  std::vector<Complex> acc(spectrum_size_, Complex{});
  std::vector<Complex> spec(spectrum_size_);
  for (int a = 0; a < dim(); ++a) {
    forward(flux[a], spec);
    const auto& kw = wavenumbers_[a];
    const auto& ny = nyquist_[a];
    for (std::size_t s = 0; s < spectrum_size_; ++s)
      if (!ny[s]) acc[s] += spec[s] * Complex(0.0, kw[s]);
  }
  std::vector<double> out(size_);
  inverse(acc, out);
  return out;
}

double SpectralGrid::spectral_moment(std::span<const Complex> spec, int power) const {
  double sum = 0.0;
  for (std::size_t s = 0; s < spectrum_size_; ++s) {
    double k2 = 0.0;
    for (int a = 0; a < dim(); ++a) k2 += wavenumbers_[a][s] * wavenumbers_[a][s];
    const double weight = power == 0 ? 1.0 : std::pow(std::sqrt(k2), power);
    sum += multiplicity_[s] * weight * std::abs(spec[s]);
  }
  return sum / static_cast<double>(size_);
}

double SpectralGrid::tail_fraction(std::span<const Complex> spec) const {
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t s = 0; s < spectrum_size_; ++s) {
    const double a = multiplicity_[s] * std::abs(spec[s]);
    total += a;
    bool upper = false;
    for (int ax = 0; ax < dim(); ++ax) upper = upper || upper_band_[ax][s];
    if (upper) tail += a;
  }
  return total > 0.0 ? tail / total : 0.0;
}

}  // namespace wlab
