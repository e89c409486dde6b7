#include "wlab/heatflow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wlab/kernels.hpp"

namespace wlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLogCutoff = 36.85;  // -log(1e-16)

// A x = -W L x = -cell * div(rho grad x)
Field apply_stiffness(const WeightedManifold& M, std::span<const double> x) {
  auto flux = M.spectral().gradient(x);
  for (auto& c : flux) kernels::mul(c, M.density(), c);
  Field out = M.spectral().divergence(flux);
  const double scale = -M.cell_volume();
  for (double& v : out) v *= scale;
  return out;
}

// Ground-state transform: with x = y / sqrt(rho) the shifted operator becomes
// cell * (1 + theta(-Delta + V)), V = Delta sqrt(rho) / sqrt(rho). The
// preconditioner inverts it with V replaced by its mean.
struct Preconditioner {
  Field inv_sqrt_rho;
  double v_mean = 0.0;

  explicit Preconditioner(const WeightedManifold& M) : inv_sqrt_rho(M.size()) {
    const auto rho = M.density();
    Field sq(M.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
      sq[i] = std::sqrt(rho[i]);
      inv_sqrt_rho[i] = 1.0 / sq[i];
    }
    const Field lap = M.spectral().divergence(M.spectral().gradient(sq));
    for (std::size_t i = 0; i < sq.size(); ++i) v_mean += lap[i] * inv_sqrt_rho[i];
    v_mean = std::max(0.0, v_mean / static_cast<double>(sq.size()));
  }

  void apply(const WeightedManifold& M, double theta, std::span<const double> r,
             std::span<double> z) const {
    const SpectralGrid& g = M.spectral();
    Field y(r.size());
    kernels::mul(r, inv_sqrt_rho, y);
    auto spec = g.transform(y);
    const double base = M.cell_volume();
    for (std::size_t s = 0; s < spec.size(); ++s) {
      double k2 = 0.0;
      for (int a = 0; a < M.dim(); ++a) k2 += g.wavenumber(s, a) * g.wavenumber(s, a);
      spec[s] /= base * (1.0 + theta * (k2 + v_mean));
    }
    g.inverse(spec, z);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] *= inv_sqrt_rho[i];
  }
};

double norm2(std::span<const double> a) { return std::sqrt(kernels::dot(a, a)); }

// One-dimensional wrapped heat kernel on a circle of length P for Lebesgue measure.
double circle_fourier(double dx, double t, double P) {
  const double kappa = kTwoPi / P;
  const int n_max = static_cast<int>(std::ceil(std::sqrt(kLogCutoff / t) / kappa)) + 1;
  double sum = 0.0;
  for (int n = n_max; n >= 1; --n) sum += std::exp(-kappa * kappa * n * n * t) * std::cos(kappa * n * dx);
  return (1.0 + 2.0 * sum) / P;
}


void require_flat(const WeightedManifold& M) {
  if (!M.potential_is_constant())
    throw std::invalid_argument("flat kernel oracle needs a constant potential");
}

int image_range(double t, double P) {
  return static_cast<int>(std::ceil(std::sqrt(4.0 * t * kLogCutoff) / P)) + 1;
}

// Same kernel as a sum over translates; positive down to underflow.
double circle_images(double dx, double t, double P) {
  const int J = image_range(t, P) + 1;
  double sum = 0.0;
  for (int j = -J; j <= J; ++j) {
    const double d = dx + j * P;
    sum += std::exp(-d * d / (4.0 * t));
  }
  return sum / std::sqrt(4.0 * std::numbers::pi * t);
}

using Profile1d = double (*)(double, double, double);

Field flat_profile(const WeightedManifold& M, std::size_t x0, double t,
                   Profile1d kernel = circle_fourier) {
  Field u(M.size());
  const auto& P = M.circumferences();
  if (M.dim() == 1) {
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] = kernel(M.coordinate(i, 0) - M.coordinate(x0, 0), t, P[0]);
    return u;
  }
  const int nx = M.grid_sizes()[0], ny = M.grid_sizes()[1];
  Field kx(nx), ky(ny);
  for (int i = 0; i < nx; ++i) kx[i] = kernel(i * M.spacing(0) - M.coordinate(x0, 0), t, P[0]);
  for (int j = 0; j < ny; ++j) ky[j] = kernel(j * M.spacing(1) - M.coordinate(x0, 1), t, P[1]);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) u[static_cast<std::size_t>(i) * ny + j] = kx[i] * ky[j];
  return u;
}

void check_positive(const HeatState& s) {
  const auto it = std::min_element(s.u.begin(), s.u.end());
  if (!(*it > 0.0)) throw PositivityError(static_cast<std::size_t>(it - s.u.begin()), *it, s.t);
}

}  // namespace

HeatState make_state(const WeightedManifold& M, Field u, double t, double origin) {
  if (u.size() != M.size()) throw std::invalid_argument("make_state: field size mismatch");
  HeatState s;
  s.t = t;
  s.origin = origin;
  s.u = std::move(u);
  s.mass = integrate_mu(M, s.u);
  return s;
}

Field solve_shifted(const WeightedManifold& M, std::span<const double> b, double theta,
                    const StepOptions& opt, StepInfo* info) {
  const std::size_t n = M.size();
  const auto w = M.measure_weights();
  const Preconditioner pre(M);

  auto apply = [&](std::span<const double> x) {
    Field y = apply_stiffness(M, x);
    for (std::size_t i = 0; i < n; ++i) y[i] = w[i] * x[i] + theta * y[i];
    return y;
  };

  Field x(n), z(n);
  pre.apply(M, theta, b, x);
  Field r(b.begin(), b.end());
  kernels::axpy(-1.0, apply(x), r);
  const double bnorm = norm2(b);
  pre.apply(M, theta, r, z);
  Field p = z;
  double rz = kernels::dot(r, z);
  double res = norm2(r);
  int it = 0;
  while (res > opt.cg_tol * bnorm && it < opt.max_iterations) {
    const Field ap = apply(p);
    const double alpha = rz / kernels::dot(p, ap);
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, ap, r);
    res = norm2(r);
    ++it;
    if (res <= opt.cg_tol * bnorm) break;
    pre.apply(M, theta, r, z);
    const double rz_new = kernels::dot(r, z);
    kernels::xpby(z, rz_new / rz, p);
    rz = rz_new;
  }
  if (info) {
    info->iterations = it;
    info->residual = bnorm > 0.0 ? res / bnorm : 0.0;
  }
  if (res > opt.cg_tol * bnorm)
    throw SolverError("CG did not converge: relative residual " + std::to_string(res / bnorm) +
                      " after " + std::to_string(it) + " iterations");
  return x;
}

HeatState step(const WeightedManifold& M, const HeatState& s, double dt, const StepOptions& opt,
               double rate, StepInfo* info) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const auto w = M.measure_weights();
  const std::size_t n = M.size();
  Field b(n);
  double theta;
  if (opt.implicit_euler) {
    theta = dt * rate;
    kernels::mul(w, s.u, b);
  } else {
    theta = 0.5 * dt * rate;
    const Field au = apply_stiffness(M, s.u);
    for (std::size_t i = 0; i < n; ++i) b[i] = w[i] * s.u[i] - theta * au[i];
  }
  Field x = solve_shifted(M, b, theta, opt, info);

  // The exact update preserves mass; remove the solver's residual drift along constants.
  const double mass_in = integrate_mu(M, s.u);
  const double shift = (mass_in - integrate_mu(M, x)) / M.total_measure();
  for (double& v : x) v += shift;

  HeatState out;
  out.t = s.t + dt;
  out.origin = s.origin;
  out.u = std::move(x);
  out.mass = integrate_mu(M, out.u);
  if (opt.check_positivity) check_positive(out);
  return out;
}

Evolution evolve(const WeightedManifold& M, const HeatState& s0, const std::vector<double>& times,
                 const EvolveOptions& opt, const RateFn& rate) {
  if (!std::is_sorted(times.begin(), times.end()))
    throw std::invalid_argument("evolve: times must be ascending");
  if (!times.empty() && times.front() < s0.t - 1e-14 * std::max(1.0, std::fabs(s0.t)))
    throw std::invalid_argument("evolve: first time precedes the initial state");
  auto c = [&](double t) { return rate ? rate(t) : 1.0; };

  Evolution ev;
  HeatState state = s0;
  double dt = opt.initial_dt;
  const std::size_t n = M.size();
  Field diff(n);
  for (double target : times) {
    while (target - state.t > 1e-14 * std::max(1.0, std::fabs(target))) {
      const double h = std::min(dt, target - state.t);
      const bool lands = h == target - state.t;
      ManifestEntry entry;
      entry.t = state.t;
      entry.dt = h;
      HeatState full, half;
      try {
        StepInfo i1, i2, i3;
        full = step(M, state, h, opt.step, c(state.t + 0.5 * h), &i1);
        half = step(M, state, 0.5 * h, opt.step, c(state.t + 0.25 * h), &i2);
        half = step(M, half, 0.5 * h, opt.step, c(state.t + 0.75 * h), &i3);
        entry.iterations = i1.iterations + i2.iterations + i3.iterations;
      } catch (const PositivityError&) {
        if (h <= opt.min_dt) throw;
        dt = 0.25 * h;
        entry.error_estimate = INFINITY;
        ev.manifest.push_back(entry);
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) diff[i] = half.u[i] - full.u[i];
      const double err = kernels::max_abs(diff) / (3.0 * kernels::max_abs(half.u));
      entry.error_estimate = err;
      const double factor = err > 0.0 ? 0.9 * std::cbrt(opt.error_target / err) : 2.0;
      if (err <= opt.error_target || h <= opt.min_dt) {
        entry.accepted = true;
        if (opt.richardson) {
          HeatState rich = half;
          for (std::size_t i = 0; i < n; ++i) rich.u[i] += diff[i] / 3.0;
          rich.mass = integrate_mu(M, rich.u);
          if (opt.step.check_positivity) check_positive(rich);
          state = std::move(rich);
        } else {
          state = std::move(half);
        }
        if (lands) state.t = target;
        // A short landing step says nothing about the natural step size.
        if (!lands || h >= dt) dt = std::clamp(h * std::clamp(factor, 0.2, 2.0), opt.min_dt, opt.max_dt);
      } else {
        dt = std::max(opt.min_dt, h * std::clamp(factor, 0.1, 0.9));
      }
      ev.manifest.push_back(entry);
    }
    state.t = target;
    ev.snapshots.push_back(state);
  }
  return ev;
}

HeatState evolve_fixed(const WeightedManifold& M, const HeatState& s0, double t_end, int steps,
                       const StepOptions& opt) {
  if (steps <= 0 || !(t_end > s0.t)) throw std::invalid_argument("evolve_fixed: bad interval");
  const double h = (t_end - s0.t) / steps;
  HeatState s = s0;
  for (int k = 0; k < steps; ++k) s = step(M, s, h, opt);
  s.t = t_end;
  return s;
}

Field flat_kernel_fourier(const WeightedManifold& M, std::size_t x0, double t) {
  require_flat(M);
  if (!(t > 0.0)) throw std::invalid_argument("flat kernel: t must be positive");
  Field u = flat_profile(M, x0, t);
  const double rho = M.density()[0];
  for (double& v : u) v /= rho;
  return u;
}

Field flat_kernel_images(const WeightedManifold& M, std::size_t x0, double t) {
  require_flat(M);
  if (!(t > 0.0)) throw std::invalid_argument("flat kernel: t must be positive");
  const auto& P = M.circumferences();
  const double rho = M.density()[0];
  Field u(M.size());
  if (M.dim() == 1) {
    const int J = image_range(t, P[0]);
    const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double dx = M.coordinate(i, 0) - M.coordinate(x0, 0);
      double sum = 0.0;
      for (int j = -J - 1; j <= J + 1; ++j) {
        const double d = dx + j * P[0];
        sum += std::exp(-d * d / (4.0 * t));
      }
      u[i] = norm * sum / rho;
    }
    return u;
  }
  const int Jx = image_range(t, P[0]) + 1, Jy = image_range(t, P[1]) + 1;
  const double norm = 1.0 / (4.0 * std::numbers::pi * t);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double dx = M.coordinate(i, 0) - M.coordinate(x0, 0);
    const double dy = M.coordinate(i, 1) - M.coordinate(x0, 1);
    double sum = 0.0;
    for (int jx = -Jx; jx <= Jx; ++jx)
      for (int jy = -Jy; jy <= Jy; ++jy) {
        const double a = dx + jx * P[0], b = dy + jy * P[1];
        sum += std::exp(-(a * a + b * b) / (4.0 * t));
      }
    u[i] = norm * sum / rho;
  }
  return u;
}

HeatState source_state(const WeightedManifold& M, std::size_t x0, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("solver.seed_time", "must be positive");
  if (x0 >= M.size()) throw ConfigError("solver.source", "node index out of range");
  Field u = flat_profile(M, x0, sigma, circle_images);
  const double mass = integrate_mu(M, u);
  for (double& v : u) v /= mass;
  return make_state(M, std::move(u), 0.0, 0.0);
}

HeatState uniform_state(const WeightedManifold& M, double t) {
  return make_state(M, Field(M.size(), 1.0 / M.total_measure()), t, 0.0);
}

HeatState initial_delta(const WeightedManifold& M, std::size_t x0, double t0,
                        const EvolveOptions& opt) {
  if (!(t0 > 0.0)) throw ConfigError("solver.t0", "must be positive");
  if (x0 >= M.size()) throw ConfigError("solver.source", "node index out of range");
  if (M.potential_is_constant()) return make_state(M, flat_kernel_fourier(M, x0, t0), t0, 0.0);

  HeatState s = source_state(M, x0, 0.5 * t0);
  s.t = 0.5 * t0;
  s.origin = 0.5 * t0;
  EvolveOptions ramp = opt;
  ramp.initial_dt = 1e-3 * t0;
  try {
    return evolve(M, s, {t0}, ramp).snapshots.back();
  } catch (const PositivityError& e) {
    throw PositivityError(e.node(), 0.0, t0);
  }
}

Field dt_log_u(const WeightedManifold& M, const HeatState& s) {
  Field lu = witten_laplacian(M, s.u);
  for (std::size_t i = 0; i < lu.size(); ++i) lu[i] /= s.u[i];
  return lu;
}

double spectral_gap(const WeightedManifold& M, double tol, int max_iterations) {
  const std::size_t n = M.size();
  const auto w = M.measure_weights();
  const double mu = M.total_measure();
  double kmin = INFINITY;
  for (double P : M.circumferences()) kmin = std::min(kmin, kTwoPi / P);
  const double sigma = 1e-2 * kmin * kmin;

  auto project = [&](Field& v) {
    const double mean = integrate_mu(M, v) / mu;
    for (double& x : v) x -= mean;
    const double norm = std::sqrt(kernels::dot3(v, v, w));
    for (double& x : v) x /= norm;
  };
  auto rayleigh = [&](const Field& v) {
    const auto grad = gradient(M, v);
    double num = 0.0;
    for (const auto& g : grad) num += kernels::dot3(g, g, w);
    return num / kernels::dot3(v, v, w);
  };

  Field v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < M.dim(); ++a) {
      const double x = kTwoPi * M.coordinate(i, a) / M.circumferences()[a];
      s += std::cos(x) + 0.37 * std::sin(x) + 0.11 * std::cos(2.0 * x + a);
    }
    v[i] = s;
  }
  project(v);
  StepOptions opt;
  opt.cg_tol = 1e-13;
  double lambda = rayleigh(v);
  Field b(n);
  for (int it = 0; it < max_iterations; ++it) {
    kernels::mul(w, v, b);
    // (A + sigma W) x = W v  <=>  (W + A / sigma) x = W v / sigma
    for (double& x : b) x /= sigma;
    v = solve_shifted(M, b, 1.0 / sigma, opt);
    project(v);
    const double next = rayleigh(v);
    const bool done = std::fabs(next - lambda) <= tol * next;
    lambda = next;
    if (done) break;
  }
  return lambda;
}

}  // namespace wlab
