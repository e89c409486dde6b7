#pragma once

// Fourier-spectral machinery on uniform periodic grids (1-d or 2-d).
//
// Nodes are stored row-major: index = ix * ny + iy. Spectra use the real-to-
// complex half layout (nx x (ny/2 + 1) in 2-d, n/2 + 1 in 1-d). Odd derivatives
// zero the Nyquist mode so the discrete derivative matrix is exactly skew.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace wlab {

using Complex = std::complex<double>;

class SpectralGrid {
 public:
  SpectralGrid(std::vector<int> sizes, std::vector<double> periods);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  int dim() const { return static_cast<int>(sizes_.size()); }
  std::size_t size() const { return size_; }
  std::size_t spectrum_size() const { return spectrum_size_; }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<double>& periods() const { return periods_; }

  // Unnormalised forward transform.
  void forward(std::span<const double> in, std::span<Complex> out) const;
  // Inverse transform including the 1/N normalisation.
  void inverse(std::span<const Complex> in, std::span<double> out) const;

  // Angular wavenumber of spectrum entry `s` along `axis` (2*pi*k/P, signed).
  double wavenumber(std::size_t s, int axis) const { return wavenumbers_[axis][s]; }
  // True when spectrum entry `s` is a Nyquist mode along `axis`.
  bool nyquist(std::size_t s, int axis) const { return nyquist_[axis][s] != 0; }
  // Multiplicity of entry `s` in the full (Hermitian) spectrum: 1 or 2.
  double multiplicity(std::size_t s) const { return multiplicity_[s]; }

  std::vector<Complex> transform(std::span<const double> f) const;

  // d/dx_axis of the trigonometric interpolant, sampled at the nodes.
  void derivative(std::span<const double> f, int axis, std::span<double> out) const;
  std::vector<double> derivative(std::span<const double> f, int axis) const;
  // All first derivatives from a single forward transform.
  std::vector<std::vector<double>> gradient(std::span<const double> f) const;
  // Sum over axes of d/dx_a (flux_a); one inverse transform.
  std::vector<double> divergence(std::span<const std::vector<double>> flux) const;

  // Spectral moment sum_k mult(k) |k|^p |f_k| / N, used for roundoff estimates.
  double spectral_moment(std::span<const Complex> spec, int power) const;
  // Fraction of the spectral l1 mass carried by modes with |k_axis| > N_axis/4
  // along some axis; small when the field is resolved.
  double tail_fraction(std::span<const Complex> spec) const;

 private:
  std::vector<int> sizes_;
  std::vector<double> periods_;
  std::size_t size_ = 0;
  std::size_t spectrum_size_ = 0;
  std::vector<std::vector<double>> wavenumbers_;
  std::vector<std::vector<char>> nyquist_;
  std::vector<std::vector<char>> upper_band_;
  std::vector<double> multiplicity_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace wlab
