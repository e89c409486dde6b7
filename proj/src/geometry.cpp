#include "wlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_integer_multiple(double value) {
  return std::fabs(value - std::round(value)) <= 1e-9 * std::max(1.0, std::fabs(value));
}

void require_periodic(double k, double period, const std::string& key) {
  if (!std::isfinite(k) || !is_integer_multiple(k * period / kTwoPi))
    throw ConfigError(key, "wavenumber must fit an integer number of periods");
}

}  // namespace

std::string to_string(Model model) {
  return model == Model::circle ? "circle" : "flat_torus_2d";
}

std::string to_string(PotentialFamily family) {
  switch (family) {
    case PotentialFamily::zero: return "zero";
    case PotentialFamily::cosine: return "cosine";
    case PotentialFamily::cos_sin: return "cos_sin";
    case PotentialFamily::samples: return "samples";
  }
  return "unknown";
}

Model parse_model(const std::string& name) {
  if (name == "circle") return Model::circle;
  if (name == "flat_torus_2d" || name == "torus") return Model::flat_torus_2d;
  throw ConfigError("model", "unknown model '" + name + "'");
}

PotentialFamily parse_family(const std::string& name) {
  if (name == "zero") return PotentialFamily::zero;
  if (name == "cosine" || name == "cos") return PotentialFamily::cosine;
  if (name == "cos_sin") return PotentialFamily::cos_sin;
  if (name == "samples") return PotentialFamily::samples;
  throw ConfigError("potential.family", "unknown family '" + name + "'");
}

WeightedManifold WeightedManifold::build(const ManifoldConfig& config) {
  const int n = config.model == Model::circle ? 1 : 2;
  std::vector<int> grid = config.grid;
  std::vector<double> period = config.period;
  if (grid.size() == 1 && n == 2) grid.push_back(grid[0]);
  if (period.size() == 1 && n == 2) period.push_back(period[0]);
  if (static_cast<int>(grid.size()) != n) throw ConfigError("grid", "one size per dimension required");
  if (static_cast<int>(period.size()) != n) throw ConfigError("period", "one period per dimension required");
  for (int g : grid)
    if (g < 16 || g % 2 != 0) throw ConfigError("grid", "sizes must be even and >= 16");
  for (double p : period)
    if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("period", "circumferences must be positive");

  WeightedManifold M;
  M.config_ = config;
  M.config_.grid = grid;
  M.config_.period = period;
  M.model_ = config.model;
  M.grid_ = grid;
  M.period_ = period;
  M.cell_volume_ = 1.0;
  std::size_t count = 1;
  for (int a = 0; a < n; ++a) {
    M.cell_volume_ *= period[a] / grid[a];
    count *= static_cast<std::size_t>(grid[a]);
  }

  const auto& pot = config.potential;
  const auto& p = pot.params;
  M.potential_.assign(count, 0.0);
  switch (pot.family) {
    case PotentialFamily::zero: break;
    case PotentialFamily::cosine: {
      if (p.empty() || p.size() > 2) throw ConfigError("potential.params", "cosine expects 'a [k]'");
      const double a = p[0];
      const double k = p.size() > 1 ? p[1] : 1.0;
      if (!std::isfinite(a)) throw ConfigError("potential.params", "amplitude must be finite");
      require_periodic(k, period[0], "potential.params");
      for (std::size_t i = 0; i < count; ++i) M.potential_[i] = a * std::cos(k * M.coordinate(i, 0));
      break;
    }
    case PotentialFamily::cos_sin: {
      if (n != 2) throw ConfigError("potential.family", "cos_sin requires the 2-d torus");
      if (p.size() != 4) throw ConfigError("potential.params", "cos_sin expects 'a k b l'");
      if (!std::isfinite(p[0]) || !std::isfinite(p[2]))
        throw ConfigError("potential.params", "amplitudes must be finite");
      require_periodic(p[1], period[0], "potential.params");
      require_periodic(p[3], period[1], "potential.params");
      for (std::size_t i = 0; i < count; ++i)
        M.potential_[i] = p[0] * std::cos(p[1] * M.coordinate(i, 0)) +
                          p[2] * std::sin(p[3] * M.coordinate(i, 1));
      break;
    }
    case PotentialFamily::samples: {
      if (pot.samples.size() != count)
        throw ConfigError("potential.samples", "expected " + std::to_string(count) + " samples, got " +
                                                   std::to_string(pot.samples.size()));
      for (double v : pot.samples)
        if (!std::isfinite(v)) throw ConfigError("potential.samples", "samples must be finite");
      M.potential_ = pot.samples;
      break;
    }
  }

  M.metric_factor_.assign(count, 1.0);
  M.density_.resize(count);
  M.weights_.resize(count);
  const double phi0 = M.potential_[0];
  double spread = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    M.density_[i] = std::exp(-M.potential_[i]);
    M.weights_[i] = M.density_[i] * M.cell_volume_;
    spread = std::max(spread, std::fabs(M.potential_[i] - phi0));
  }
  M.potential_constant_ = spread <= 1e-13 * std::max(1.0, std::fabs(phi0));
  double total = 0.0;
  for (double w : M.weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("potential", "measure weights must be positive and finite");
    total += w;
  }
  M.total_measure_ = total;
  M.spectral_ = std::make_shared<const SpectralGrid>(grid, period);
  M.density_spectrum_ = M.spectral_->transform(M.density_);
  return M;
}

double WeightedManifold::coordinate(std::size_t node, int axis) const {
  if (dim() == 1) return static_cast<double>(node) * spacing(0);
  const std::size_t ny = static_cast<std::size_t>(grid_[1]);
  const std::size_t idx = axis == 0 ? node / ny : node % ny;
  return static_cast<double>(idx) * spacing(axis);
}

std::size_t WeightedManifold::node_at(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != dim()) throw std::invalid_argument("node_at: dimension mismatch");
  std::size_t node = 0;
  for (int a = 0; a < dim(); ++a) {
    const int n = grid_[a];
    const int i = ((index[a] % n) + n) % n;
    node = node * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
  }
  return node;
}

std::optional<double> WeightedManifold::closed_form_measure() const {
  double box = 1.0;
  for (double p : period_) box *= p;
  const auto& p = config_.potential.params;
  switch (config_.potential.family) {
    case PotentialFamily::zero: return box;
    case PotentialFamily::cosine: return box * std::cyl_bessel_i(0.0, std::fabs(p[0]));
    case PotentialFamily::cos_sin:
      return box * std::cyl_bessel_i(0.0, std::fabs(p[0])) * std::cyl_bessel_i(0.0, std::fabs(p[2]));
    case PotentialFamily::samples: return std::nullopt;
  }
  return std::nullopt;
}

double WeightedManifold::distance(std::size_t a, std::size_t b) const {
  double sq = 0.0;
  for (int ax = 0; ax < dim(); ++ax) {
    const double P = period_[ax];
    double d = std::fabs(coordinate(a, ax) - coordinate(b, ax));
    d = std::fmod(d, P);
    d = std::min(d, P - d);
    sq += d * d;
  }
  return std::sqrt(sq);
}

double WeightedManifold::injectivity_scale() const {
  return 0.5 * *std::min_element(period_.begin(), period_.end());
}

double WeightedManifold::ball_measure(std::size_t center, double radius) const {
  const SpectralGrid& g = *spectral_;
  double y[2] = {coordinate(center, 0), dim() == 2 ? coordinate(center, 1) : 0.0};
  double sum = 0.0;
  for (std::size_t s = 0; s < g.spectrum_size(); ++s) {
    double kdoty = 0.0;
    double k2 = 0.0;
    for (int a = 0; a < dim(); ++a) {
      const double k = g.wavenumber(s, a);
      kdoty += k * y[a];
      k2 += k * k;
    }
    const double phase = std::real(density_spectrum_[s] * std::polar(1.0, kdoty));
    double kernel;
    if (dim() == 1) {
      const double k = std::sqrt(k2);
      kernel = k == 0.0 ? 2.0 * radius : 2.0 * std::sin(k * radius) / k;
    } else {
      const double k = std::sqrt(k2);
      kernel = k == 0.0 ? std::numbers::pi * radius * radius
                        : kTwoPi * radius * std::cyl_bessel_j(1.0, k * radius) / k;
    }
    sum += g.multiplicity(s) * phase * kernel;
  }
  return sum / static_cast<double>(size());
}

double smallest_eigenvalue(std::span<const double> e) {
  if (e.size() == 1) return e[0];
  const double mean = 0.5 * (e[0] + e[2]);
  const double half_diff = 0.5 * (e[0] - e[2]);
  return mean - std::hypot(half_diff, e[1]);
}

double dimension_gap(const WeightedManifold& M, double m) {
  const double n = M.dim();
  if (std::isnan(m)) throw ConfigError("m", "dimension parameter is NaN");
  if (std::isinf(m)) {
    if (m < 0) throw ConfigError("m", "must be >= n");
    return kInfiniteDimension;
  }
  const double gap = m - n;
  if (gap < -1e-12) throw ConfigError("m", "must satisfy m >= n (got m=" + std::to_string(m) + ")");
  if (gap < 1e-12) {
    if (!M.potential_is_constant())
      throw ConfigError("m", "m = n is only defined for a constant potential");
    return 0.0;
  }
  return gap;
}

std::vector<std::vector<double>> bakry_emery_tensor(const WeightedManifold& M, double m) {
  const double gap = dimension_gap(M, m);
  const SpectralGrid& g = M.spectral();
  const auto grad = g.gradient(M.potential());
  const std::size_t N = M.size();
  const bool rank_one = std::isfinite(gap) && gap > 0.0;
  // Ric = 0 on the flat base metrics.
  if (M.dim() == 1) {
    std::vector<double> xx = g.derivative(grad[0], 0);
    if (rank_one)
      for (std::size_t i = 0; i < N; ++i) xx[i] -= grad[0][i] * grad[0][i] / gap;
    return {std::move(xx)};
  }
  std::vector<double> xx = g.derivative(grad[0], 0);
  std::vector<double> xy = g.derivative(grad[0], 1);
  std::vector<double> yy = g.derivative(grad[1], 1);
  if (rank_one) {
    for (std::size_t i = 0; i < N; ++i) {
      xx[i] -= grad[0][i] * grad[0][i] / gap;
      xy[i] -= grad[0][i] * grad[1][i] / gap;
      yy[i] -= grad[1][i] * grad[1][i] / gap;
    }
  }
  return {std::move(xx), std::move(xy), std::move(yy)};
}

CurvatureField ricci_bakry_emery(const WeightedManifold& M, double m) {
  const auto tensor = bakry_emery_tensor(M, m);
  CurvatureField field;
  field.m = m;
  field.values.resize(M.size());
  double entries[3];
  for (std::size_t i = 0; i < M.size(); ++i) {
    for (std::size_t c = 0; c < tensor.size(); ++c) entries[c] = tensor[c][i];
    field.values[i] = smallest_eigenvalue(std::span<const double>(entries, tensor.size()));
  }
  const auto it = std::min_element(field.values.begin(), field.values.end());
  field.min_value = *it;
  field.argmin = static_cast<std::size_t>(it - field.values.begin());
  field.admissible_K = std::max(0.0, -field.min_value);
  return field;
}

BallRatioCheck ball_volume_ratio_check(const WeightedManifold& M, double m, double K,
                                       std::size_t center, double r, double R, double tol) {
  if (!(r > 0.0) || !(r < R)) throw ConfigError("r", "require 0 < r < R");
  if (R > M.injectivity_scale() * (1.0 + 1e-12))
    throw ConfigError("R", "ball exceeds the injectivity scale (it would wrap)");
  if (!(K >= 0.0)) throw ConfigError("K", "must be non-negative");
  if (!std::isfinite(m) || m < M.dim()) throw ConfigError("m", "must be finite and >= n");
  if (center >= M.size()) throw ConfigError("y", "node index out of range");
  BallRatioCheck out;
  out.ratio = M.ball_measure(center, R) / M.ball_measure(center, r);
  out.bound = std::pow(R / r, m) * std::exp(std::sqrt((m - 1.0) * K) * R);
  out.ok = out.ratio <= out.bound * (1.0 + tol);
  return out;
}

}  // namespace wlab
