#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "wlab/entropy.hpp"
#include "wlab/heatflow.hpp"

namespace wlab::testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// a = 0 gives the flat model; otherwise phi = a cos x.
inline WeightedManifold circle(int n = 256, double a = 0.0) {
  ManifoldConfig c;
  c.model = Model::circle;
  c.grid = {n};
  c.period = {kTwoPi};
  if (a != 0.0) c.potential = {PotentialFamily::cosine, {a, 1.0}, {}};
  return WeightedManifold::build(c);
}

inline WeightedManifold torus(int n = 64, double a = 0.0) {
  ManifoldConfig c;
  c.model = Model::flat_torus_2d;
  c.grid = {n, n};
  c.period = {kTwoPi, kTwoPi};
  if (a != 0.0) c.potential = {PotentialFamily::cosine, {a, 1.0}, {}};
  return WeightedManifold::build(c);
}

inline Field random_band_limited(const WeightedManifold& M, std::mt19937_64& rng, int band) {
  std::normal_distribution<double> normal;
  Field f(M.size(), 0.0);
  const int ky_max = M.dim() == 2 ? band : 0;
  for (int kx = 0; kx <= band; ++kx)
    for (int ky = -ky_max; ky <= ky_max; ++ky) {
      const double a = normal(rng), b = normal(rng);
      const double decay = 1.0 / (1.0 + kx * kx + ky * ky);
      for (std::size_t i = 0; i < f.size(); ++i) {
        double arg = kx * M.coordinate(i, 0);
        if (M.dim() == 2) arg += ky * M.coordinate(i, 1);
        f[i] += decay * (a * std::cos(arg) + b * std::sin(arg));
      }
    }
  return f;
}

// States at t - h, t, t + h; the approach to t - h uses the loose target,
// the window itself a tight one so centred differences see little step noise.
struct Window {
  HeatState lo, mid, hi;
};

inline Window window(const WeightedManifold& M, const HeatState& s0, double t, double h,
                     const RateFn& rate = {}) {
  EvolveOptions loose;
  const HeatState lo = evolve(M, s0, {t - h}, loose, rate).snapshots.back();
  EvolveOptions tight;
  tight.error_target = 1e-11;
  tight.initial_dt = h / 4.0;
  const auto ev = evolve(M, lo, {t - h, t, t + h}, tight, rate).snapshots;
  return {ev[0], ev[1], ev[2]};
}

inline double rel(double a, double b) { return std::fabs(a - b) / (1.0 + std::fabs(b)); }

}  // namespace wlab::testing
