#pragma once

// Multi-trial benchmark runner. Trial i draws its initial network from seed
// base_seed + i and every trainer config in the experiment starts from that
// same network.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjbnn/config.hpp"
#include "hjbnn/datasets.hpp"
#include "hjbnn/network.hpp"
#include "hjbnn/optimizers.hpp"

namespace hjbnn {

/// Names a generator ("modulo2", "xor", "parity", "gabor") or "csv" plus its parameters.
struct DatasetSpec {
  std::string name = "modulo2";
  std::size_t bits = 8;           // parity
  std::size_t n = 100;            // gabor
  std::uint64_t seed = 0;         // gabor sampling, csv shuffle
  bool gabor_isotropic = false;   // gabor
  std::string path;               // csv
  std::size_t n_inputs = 0;       // csv
  std::size_t target_column = 0;  // csv
  std::vector<std::size_t> skip_columns;  // csv
  bool encode_targets = true;     // csv
  std::size_t split_train = 0;    // csv
  std::string label;              // csv display name

  Dataset build() const;
  bool operator==(const DatasetSpec&) const = default;
};

struct Experiment {
  DatasetSpec dataset_spec;
  Architecture arch;
  std::vector<TrainerConfig> trainer_configs;
  std::size_t n_trials = 1;
  std::uint64_t base_seed = 0;
  double init_half_range = 1.0;
  /// Epochs at which the mean RMS over trials is reported.
  std::vector<std::size_t> checkpoints;

  void validate() const;
  bool operator==(const Experiment&) const = default;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t init_hash = 0;
  TrialResult result;
  std::optional<double> misclassification_rate;
  /// Costate-recursion residual per epoch (adaptive-critic runs only).
  std::vector<double> residual_history;

  bool operator==(const TrialRecord&) const = default;
};

struct AlgorithmReport {
  std::string label;
  TrainerConfig config;  // resolved
  double success_score = 0.0;
  std::size_t converged_trials = 0;
  std::optional<double> avg_epochs;     // converged trials only
  std::optional<double> median_epochs;  // converged trials only
  double avg_wall_time = 0.0;
  double mean_final_rms = 0.0;
  std::optional<double> misclassification_rate;
  std::map<std::size_t, double> rms_at_checkpoints;
  std::vector<TrialRecord> trials;

  bool operator==(const AlgorithmReport&) const = default;
};

struct SuccessReport {
  Experiment experiment;
  std::string dataset_name;
  std::vector<AlgorithmReport> algorithms;

  const AlgorithmReport& find(const std::string& label) const;
  bool operator==(const SuccessReport&) const = default;
};

struct RunOptions {
  /// Worker threads across trials; 1 runs sequentially.
  std::size_t jobs = 1;
  /// Called after each finished (trial, config) pair.
  std::function<void(const std::string&)> progress;
};

SuccessReport run_experiment(const Experiment& exp, const RunOptions& options = {});
/// Runs against an already-built dataset (exp.dataset_spec is only recorded).
SuccessReport run_experiment(const Experiment& exp, const Dataset& data,
                             const RunOptions& options = {});

/// Folds per-trial records into the summary statistics of one algorithm.
AlgorithmReport summarize(const TrainerConfig& config, std::vector<TrialRecord> trials,
                          std::span<const std::size_t> checkpoints);

/// Fraction of patterns whose thresholded output class differs from the target
/// class. Targets at or above 0.5 belong to the high class.
double misclassification_rate(const Network& net, const Matrix& inputs, const Matrix& targets,
                              double threshold = 0.5);

enum class ReportFormat { Json, Csv };
ReportFormat parse_report_format(const std::string& s);

/// One row per algorithm: label, params, success_score, avg_epochs, avg_wall_time,
/// misclassification_rate.
std::string summary_csv(const SuccessReport& report);
/// Long format: algorithm, trial, epoch, rms.
std::string curves_csv(const SuccessReport& report);
/// JSON writes `path`; CSV writes the summary to `path` and the curves next to it
/// as <stem>_curves.csv. Throws IoError when a file cannot be written.
void emit_report(const SuccessReport& report, const std::string& path, ReportFormat format);

// Basins of attraction on the quartic toy problem.

enum class ScalarRule { Gradient, HjbSingle };
ScalarRule parse_scalar_rule(const std::string& s);
std::string to_string(ScalarRule rule);

struct BasinSettings {
  ScalarRule rule = ScalarRule::Gradient;
  double eta = 0.1;  // gradient rule
  double r = 1.0;    // HJB rule
  double dt = 1.0;
  double jac_tolerance = 1e-8;
  std::size_t max_steps = 1'000'000;
};

struct BasinPoint {
  double w0 = 0.0;
  double terminal = 0.0;
  std::size_t steps = 0;
  bool stationary = false;  // |J| fell below the tolerance
};

std::vector<BasinPoint> basin_experiment(const BasinSettings& settings,
                                         std::span<const double> w0_grid);

}  // namespace hjbnn
