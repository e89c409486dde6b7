#pragma once

// Config-driven pipeline: build -> curvature -> evolve -> checks -> reports.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wlab/ricciflow.hpp"

namespace wlab {

enum class KMode { admissible, explicit_value, fitted };

struct ExperimentConfig {
  ManifoldConfig manifold;

  // [solver]
  std::string initial = "seeded";  // seeded | kernel
  double seed_time = 0.25;         // width-time of the seeded profile
  std::vector<int> source;         // grid index per axis
  double t0 = 0.0;                 // kernel start time (0: grid spacing squared)
  std::vector<double> snapshots;
  double error_target = 1e-8;
  double fd_step = 1e-3;  // half-width of the finite-difference windows

  // [checks]
  std::vector<std::string> select;
  std::vector<double> m_values;
  KMode k_mode = KMode::admissible;
  double K_value = 0.0;
  double rel_tol = 1e-6;
  std::vector<std::pair<double, double>> integrated;  // (tau, T) pairs
  int sample_nodes = 8;

  std::optional<FlowParams> flow;

  std::filesystem::path output_dir = "wlab_out";
  int grid_scale = 1;
  std::uint64_t seed = 1;
};

// Parses an INI file; throws ConfigError naming the offending key.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

// Checks run by each subcommand.
const std::vector<std::string>& checks_for(const std::string& command);
const std::vector<std::string>& all_checks();

struct CheckResult {
  std::string name;
  bool asserted = true;  // false: informational, never fails the run
  bool ok = false;
  double worst = 0.0;    // worst defect or residual, in the check's own units
  std::string detail;
};

struct ExperimentResult {
  std::vector<CheckResult> checks;
  int exit_code = 0;
};

// `command` is one of curvature, simulate, harnack, entropy, flow, all.
// Numerical failures (positivity, solver) are recorded as failed checks.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& command,
                                const std::vector<std::string>& only = {});

}  // namespace wlab
