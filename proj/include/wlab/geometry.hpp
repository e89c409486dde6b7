#pragma once

// Discrete weighted manifolds on periodic grids and their Bakry-Emery curvature.

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wlab/spectral.hpp"

namespace wlab {

// Thrown for invalid configurations or out-of-domain parameters.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Sentinel for the infinite-dimensional Bakry-Emery tensor Ric(L) = Ric + Hess(phi).
inline constexpr double kInfiniteDimension = std::numeric_limits<double>::infinity();

enum class Model { circle, flat_torus_2d };

enum class PotentialFamily {
  zero,     // phi = 0
  cosine,   // phi = a cos(k x)                 params: a k
  cos_sin,  // phi = a cos(k x) + b sin(l y)     params: a k b l  (torus)
  samples,  // phi given per node
};

struct PotentialSpec {
  PotentialFamily family = PotentialFamily::zero;
  std::vector<double> params;
  std::vector<double> samples;
};

struct ManifoldConfig {
  Model model = Model::circle;
  std::vector<int> grid;         // N, or {Nx, Ny}
  std::vector<double> period;    // coordinate period per axis
  PotentialSpec potential;
};

std::string to_string(Model model);
std::string to_string(PotentialFamily family);
Model parse_model(const std::string& name);
PotentialFamily parse_family(const std::string& name);

class WeightedManifold {
 public:
  static WeightedManifold build(const ManifoldConfig& config);

  Model model() const { return model_; }
  int dim() const { return static_cast<int>(grid_.size()); }
  std::size_t size() const { return potential_.size(); }
  const std::vector<int>& grid_sizes() const { return grid_; }
  const std::vector<double>& circumferences() const { return period_; }
  double spacing(int axis) const { return period_[axis] / grid_[axis]; }
  double cell_volume() const { return cell_volume_; }
  const ManifoldConfig& config() const { return config_; }

  // Coordinate of `node` along `axis`, in [0, period).
  double coordinate(std::size_t node, int axis) const;
  std::size_t node_at(std::span<const int> index) const;

  std::span<const double> metric_factor() const { return metric_factor_; }
  std::span<const double> potential() const { return potential_; }
  // exp(-phi): density of mu against Lebesgue measure.
  std::span<const double> density() const { return density_; }
  // exp(-phi) sqrt(det g) * cell volume: quadrature weights of mu.
  std::span<const double> measure_weights() const { return weights_; }
  double total_measure() const { return total_measure_; }
  bool potential_is_constant() const { return potential_constant_; }

  // mu(M) for named potential families, from Bessel I0 identities.
  std::optional<double> closed_form_measure() const;

  // Geodesic distance on the flat quotient.
  double distance(std::size_t a, std::size_t b) const;
  // Half the smallest circumference: balls below this radius do not wrap.
  double injectivity_scale() const;
  // mu of the geodesic ball B(y, r), integrating the trigonometric interpolant of
  // the density exactly over the arc (circle) or disc (torus).
  double ball_measure(std::size_t center, double radius) const;

  const SpectralGrid& spectral() const { return *spectral_; }

 private:
  WeightedManifold() = default;

  ManifoldConfig config_;
  Model model_ = Model::circle;
  std::vector<int> grid_;
  std::vector<double> period_;
  double cell_volume_ = 0.0;
  std::vector<double> metric_factor_;
  std::vector<double> potential_;
  std::vector<double> density_;
  std::vector<double> weights_;
  double total_measure_ = 0.0;
  bool potential_constant_ = false;
  std::shared_ptr<const SpectralGrid> spectral_;
  std::vector<Complex> density_spectrum_;
};

struct CurvatureField {
  double m = 0.0;
  std::vector<double> values;  // smallest eigenvalue of Ric_{m,n}(L) per node
  double min_value = 0.0;
  std::size_t argmin = 0;
  double admissible_K = 0.0;   // max(0, -min_value)
};

// Per-node symmetric tensor Ric + Hess(phi) - dphi (x) dphi / (m - n). Entries are
// (xx) in 1-d and (xx, xy, yy) in 2-d. m = kInfiniteDimension drops the rank-one term.
std::vector<std::vector<double>> bakry_emery_tensor(const WeightedManifold& M, double m);

// Validates m against the manifold dimension and potential; returns m - n, or
// +inf for the infinite sentinel, and 0 when m is treated as n.
double dimension_gap(const WeightedManifold& M, double m);

CurvatureField ricci_bakry_emery(const WeightedManifold& M, double m);

struct BallRatioCheck {
  double ratio = 0.0;
  double bound = 0.0;
  bool ok = false;
};

BallRatioCheck ball_volume_ratio_check(const WeightedManifold& M, double m, double K,
                                       std::size_t center, double r, double R,
                                       double tol = 1e-9);

// Smallest eigenvalue of a symmetric 2x2 (or 1x1) tensor stored as above.
double smallest_eigenvalue(std::span<const double> entries);

}  // namespace wlab
