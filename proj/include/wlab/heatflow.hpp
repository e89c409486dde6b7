#pragma once

// Heat flow du/dt = c(t) L u on a WeightedManifold: Crank-Nicolson steps solved by
// preconditioned CG, adaptive step doubling, and closed-form flat-kernel oracles.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wlab/operator.hpp"

namespace wlab {

struct HeatState {
  double t = 0.0;
  // Time at which this positive solution started. Harnack and entropy
  // functionals use the elapsed time t - origin.
  double origin = 0.0;
  Field u;
  double mass = 0.0;

  double elapsed() const { return t - origin; }
};

class PositivityError : public std::runtime_error {
 public:
  PositivityError(std::size_t node, double value, double t)
      : std::runtime_error("positivity lost at node " + std::to_string(node) + " (u=" +
                           std::to_string(value) + ", t=" + std::to_string(t) + ")"),
        node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepOptions {
  bool implicit_euler = false;  // fallback: first order, strongly positivity preserving
  double cg_tol = 1e-13;
  int max_iterations = 1000;
  bool check_positivity = true;
};

struct StepInfo {
  int iterations = 0;
  double residual = 0.0;
};

// Rate factor c(t) multiplying L; flows with a space-constant conformal factor
// reduce to this. Evaluated at step midpoints.
using RateFn = std::function<double(double)>;

HeatState make_state(const WeightedManifold& M, Field u, double t, double origin = 0.0);

// One step of size dt for du/dt = rate * L u.
HeatState step(const WeightedManifold& M, const HeatState& s, double dt,
               const StepOptions& opt = {}, double rate = 1.0, StepInfo* info = nullptr);

struct EvolveOptions {
  double error_target = 1e-8;  // local error per step, relative to max u
  double initial_dt = 1e-3;
  double min_dt = 1e-12;
  double max_dt = 0.1;
  // Replace the two half steps by their Richardson combination with the full step.
  bool richardson = false;
  StepOptions step;
};

struct ManifestEntry {
  double t = 0.0;
  double dt = 0.0;
  double error_estimate = 0.0;
  int iterations = 0;
  bool accepted = false;
};

struct Evolution {
  std::vector<HeatState> snapshots;
  std::vector<ManifestEntry> manifest;
};

// Snapshots at the requested ascending times (each >= s0.t); a time equal to
// s0.t returns s0 itself.
Evolution evolve(const WeightedManifold& M, const HeatState& s0, const std::vector<double>& times,
                 const EvolveOptions& opt = {}, const RateFn& rate = {});

// Fixed uniform Crank-Nicolson steps; used for convergence studies.
HeatState evolve_fixed(const WeightedManifold& M, const HeatState& s0, double t_end, int steps,
                       const StepOptions& opt = {});

// Heat kernel of the flat model (phi constant) from node x0 at time t, by the
// Fourier eigen-expansion truncated below 1e-16.
Field flat_kernel_fourier(const WeightedManifold& M, std::size_t x0, double t);
// The same kernel as a sum of Gaussian images over lattice translates.
Field flat_kernel_images(const WeightedManifold& M, std::size_t x0, double t);

// Approximation of p_{t0}(., x0) with unit mass. Exact for constant phi;
// otherwise seeded with the flat profile at t0/2 and ramped to t0 under L.
HeatState initial_delta(const WeightedManifold& M, std::size_t x0, double t0,
                        const EvolveOptions& opt = {});

// Smooth positive start: the flat kernel profile of width-time sigma around x0,
// normalised to unit mu-mass, at t = 0.
HeatState source_state(const WeightedManifold& M, std::size_t x0, double sigma);

HeatState uniform_state(const WeightedManifold& M, double t = 0.0);

// d/dt log u = Lu / u via the equation.
Field dt_log_u(const WeightedManifold& M, const HeatState& s);

// Smallest nonzero eigenvalue of -L, by shifted inverse iteration.
double spectral_gap(const WeightedManifold& M, double tol = 1e-12, int max_iterations = 500);

// Applies (W + theta A) x = b with W the measure weights and A = -W L, via PCG.
Field solve_shifted(const WeightedManifold& M, std::span<const double> b, double theta,
                    const StepOptions& opt, StepInfo* info = nullptr);

}  // namespace wlab
