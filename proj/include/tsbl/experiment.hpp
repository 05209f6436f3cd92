#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsbl/datagen.hpp"
#include "tsbl/types.hpp"

// Config-driven Monte Carlo sweeps. A config spans a grid over any of
// {M, L, K, SNR, beta-or-C}; every (cell, trial) generates one problem from
// seeds derived from (master_seed, cell_index, trial), runs each selected
// algorithm on the identical data, and records one row per algorithm.
// Output is a raw per-trial CSV, an aggregated CSV and one SVG plot per
// varying grid axis.

namespace tsbl::bench {

enum class Algorithm { Tsbl, Tmsbl, Msbl };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct SolverSettings {
  std::string preset = "auto";  // auto | noiseless | high_snr | low_snr
  int max_iters = 2000;
  double gamma_tol = 1e-8;
  double prune_thresh = 1e-5;
  std::optional<double> lambda_fixed;  // force a fixed lambda for all solvers
  double eta = 2.0;                    // ridge weight for the regularized B rule
};

struct SourceSpec {
  std::string kind = "common_ar1";  // common_ar1 | ar | ma
  int order = 1;
  std::vector<double> coeffs;       // empty = sampled per source
};

struct DictionarySpec {
  std::string kind = "unit_hypersphere";  // unit_hypersphere | hadamard_rows
  Index order = 128;                      // Hadamard order
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string experiment_id = "default";
  Index n = 25;
  std::vector<Index> m = {125};
  std::vector<Index> l = {4};
  std::vector<Index> k = {12};
  std::vector<double> snr_db = {std::numeric_limits<double>::infinity()};
  std::vector<double> beta = {0.9};  // common-AR1 correlation axis
  std::vector<double> c;             // when set, beta_j = sign(c)(1 - 10^-|c|)
  SourceSpec source;
  std::string rescale = "auto";      // auto | third_to_one | unit_norm
  DictionarySpec dictionary;
  std::vector<std::string> algorithms = {"tmsbl", "msbl"};
  int trials = 200;
  std::uint64_t master_seed = 20110901;
  int jobs = 0;                      // worker threads; 0 = hardware concurrency
  bool timestamp = true;             // off = byte-reproducible output
  SolverSettings solver;
  std::string output_dir = "bench-out";

  void validate() const;
};

ExperimentConfig default_config();
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct CellSpec {
  Index cell_index = 0;
  Index n = 0, m = 0, l = 0, k = 0;
  double snr_db = std::numeric_limits<double>::infinity();
  double beta = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> c;
};

std::vector<CellSpec> enumerate_cells(const ExperimentConfig& config);

struct TrialRecord {
  CellSpec cell;
  int trial = 0;
  Algorithm algorithm = Algorithm::Tmsbl;
  bool failure = true;
  double mse = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double wall_ms = 0.0;
  Index gamma_card = 0;
  bool converged = false;
  std::string error_tag;
};

// Runs the full grid. Solver exceptions are caught per trial and recorded as
// failed trials with an error tag; the sweep itself never aborts. Records are
// returned in deterministic (cell, trial, algorithm) order regardless of the
// worker count.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

struct AggregateRow {
  CellSpec cell;
  Algorithm algorithm = Algorithm::Tmsbl;
  int trials = 0;
  double failure_rate = 0.0;
  double mean_mse = std::numeric_limits<double>::quiet_NaN();
  double mean_iterations = 0.0;
};

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records);

std::string raw_csv(const std::vector<TrialRecord>& records, const ExperimentConfig& config);
std::string aggregate_csv(const std::vector<AggregateRow>& rows, const ExperimentConfig& config);

// Writes raw CSV, aggregated CSV and the per-axis plots into
// config.output_dir. Returns the paths written.
std::vector<std::string> emit_report(const std::vector<TrialRecord>& records,
                                     const ExperimentConfig& config);

// Picks the fixed lambda with the lowest failure rate for one algorithm on
// one cell's problem distribution, over a log-spaced candidate grid
// (default 1e-4 ... 1, 9 points).
double grid_search_lambda(const ExperimentConfig& config, const CellSpec& cell,
                          Algorithm algorithm, int trials,
                          const std::vector<double>& candidates = {});

// Seeded self-checks of the model identities, the separable-inverse
// approximation, the stationary-gamma oracle and the generators. Prints one
// pass/fail line per check; returns true when everything passed.
bool run_verification(std::ostream& out, std::uint64_t seed = 4242);

}  // namespace tsbl::bench
