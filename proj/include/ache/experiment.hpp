#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ache/diagnostics.hpp"
#include "ache/dissipation_analyzer.hpp"
#include "ache/shear_profile.hpp"
#include "ache/solver.hpp"

namespace ache {

enum class Mode { simulate, simulate_1d, analyze, sweep, verify };

std::string to_string(Mode mode);

struct ExperimentConfig {
  Mode mode = Mode::simulate;
  std::filesystem::path output_dir = "ache_out";
  std::uint64_t seed = 1;
  SolverConfig solver;

  std::string profile_name = "sin";   // zero | sin | cos | sin3 | table
  double profile_amplitude = 1.0;
  std::filesystem::path profile_table;

  std::string initial_preset = "remark-example";
  double epsilon = 0.1;
  int band_limit = 8;
  std::filesystem::path initial_snapshot;

  double c_star = 1.0;

  std::vector<double> nu_grid{1e-2, 1e-3, 1e-4, 1e-5};
  double analyzer_mu = 1.0;
  int K = 8;
  int M = 128;
  double t_max = 1e4;
  double lambda = 0.0;   // 0: measure from the analyzer

  bool sweep_simulate = false;
  bool full_pairs = false;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Every recognized key with its documented range, in resolved-file order.
struct ConfigKey {
  std::string name;
  std::string range;
};
const std::vector<ConfigKey>& config_keys();

/// Parses "key = value" text (# comments, dotted keys) over the defaults,
/// then applies the overrides. ConfigError names the key or the range.
ExperimentConfig load_config(const std::string& text, const ConfigOverrides& overrides = {});

/// load_config on a file (empty path: defaults only) and writes
/// output_dir/config.resolved.
ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// All keys with their resolved values; load_config(resolved_text(c)) == c.
std::string resolved_text(const ExperimentConfig& config);

ShearProfile make_profile(const ExperimentConfig& config);

/// remark-example | random-bandlimited | one-d-only | snapshot
Field2D make_initial(const std::string& preset, GridSpec grid, std::uint64_t seed, double epsilon = 0.1,
                     int band_limit = 8, const std::filesystem::path& snapshot = {});
Field2D make_initial(const ExperimentConfig& config);

/// Worker count from ACHE_NUM_THREADS, else the hardware concurrency.
int worker_threads();

/// Writes series.csv, snapshots/ and summary.txt into output_dir.
RunResult simulate(const ExperimentConfig& config);

/// 1D run from the streamwise average of the initial field; writes
/// series_1d.csv and final_1d.csv.
Trajectory1D simulate_1d(const ExperimentConfig& config);

/// Scaling fit over analyzer.nu_grid (rates only with fewer than 4 values);
/// writes curves.csv, summary.csv and analyze.txt.
RateFit analyze(const ExperimentConfig& config);

struct SweepRow {
  double nu = 0.0;
  bool ok = false;
  std::string reason;
  double lambda = nan_value;
  double rate_ratio = nan_value;
  int theorem_holds = -1;   // -1: not simulated
};

struct SweepResult {
  std::vector<SweepRow> rows;   // ordered by nu
  bool fitted = false;          // power law over the ok rows
  PowerLaw law;
  double exponent_predicted = nan_value;
};
/// One job per nu, failures kept per row; writes sweep.csv, summary.csv
/// (ok rows) and sweep.txt.
SweepResult run_sweep(const ExperimentConfig& config);

struct Criterion {
  std::string name;
  bool applicable = true;   // false when gated off by failed smallness
  bool pass = false;
  std::string detail;
};

struct VerifyResult {
  std::vector<Criterion> criteria;
  double lambda = 0.0;
  ConstantsReport constants;
  TheoremVerdict theorem;
  BootstrapReport bootstrap;
  RunResult run;
  double one_d_error = nan_value;
  int exit_code = 0;   // 0 all applicable criteria pass, 1 otherwise
  std::string first_failure;
};

/// analyzer -> simulation -> theorem check -> bootstrap monitor -> 1D
/// comparison; writes series.csv and report.txt into output_dir.
VerifyResult verify(const ExperimentConfig& config);

}  // namespace ache
