#pragma once

// Experiment orchestration: (q, beta) grid sweeps of the q-SF optimizer on
// the queueing network, multi-trial execution, and CSV persistence.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qsf/optimizer.hpp"
#include "qsf/queuesim.hpp"
#include "qsf/rng.hpp"

namespace qsf {

/// A schema violation; key_path() names the offending entry (e.g.
/// "optimizer.box_min[2]").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message);
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

struct OptimizerSettings {
  std::size_t M = 10000;
  std::size_t L = 100;
  Vector box_min{0.0, 0.0, 0.0, 0.0};
  Vector box_max{5.0, 5.0, 5.0, 5.0};
  Vector theta0{5.0, 5.0, 5.0, 5.0};
  ZUpdateSource z_update = ZUpdateSource::latest;
  double divergence_threshold = 1e12;

  friend bool operator==(const OptimizerSettings&, const OptimizerSettings&) = default;
};

struct ExperimentConfig {
  std::vector<double> q_values{0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1,
                               1.2, 1.3, 1.4, 1.5, 1.6, 2.0, 2.5};
  std::vector<double> beta_values{0.0005, 0.005, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5};
  std::size_t trials = 20;
  std::uint64_t base_seed = 20100705;
  std::filesystem::path output_dir = "results";
  unsigned workers = 1;  ///< does not affect any output
  OptimizerSettings optimizer;
  QueueNetworkConfig network;

  /// Throws ConfigError.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses the JSON config text. Missing keys keep their defaults; unknown
/// keys are errors. Vectors sized by the network dimension default to that
/// size when N1 or N2 change.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Stream-id of cell (q_index, beta_index, trial): disjoint 16/16/32-bit
/// fields, so distinct cells never share a stream.
std::uint64_t cell_stream_id(std::size_t q_index, std::size_t beta_index, std::size_t trial);

/// Optimizer configuration of one cell; the perturbation stream is child 0
/// of the cell stream.
TwoTimescaleConfig cell_optimizer_config(const ExperimentConfig& cfg, std::size_t q_index,
                                         std::size_t beta_index, std::size_t trial);

/// Fresh network for one cell, driven by child 1 of the cell stream.
QueueNetwork cell_network(const ExperimentConfig& cfg, std::size_t q_index,
                          std::size_t beta_index, std::size_t trial);

enum class TrialStatus { ok, diverged, boundary };

std::string_view to_string(TrialStatus s);
TrialStatus parse_trial_status(std::string_view s);

struct TrialRecord {
  std::size_t q_index = 0;
  std::size_t beta_index = 0;
  std::size_t trial = 0;
  double q = 0.0;
  double beta = 0.0;
  std::uint64_t stream_id = 0;
  double final_distance = 0.0;
  TrialStatus status = TrialStatus::ok;
  std::optional<std::size_t> divergence_n;
  double wall_time = 0.0;  ///< seconds; kept out of sweep.csv
};

struct SweepResult {
  std::vector<double> q_values;
  std::vector<double> beta_values;
  std::size_t trials = 0;
  std::vector<TrialRecord> records;  ///< ordered by (q_index, beta_index, trial)
};

struct CellSummary {
  std::size_t q_index = 0;
  std::size_t beta_index = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double standard_error = 0.0;  ///< NaN for a single trial
  std::size_t divergent = 0;

  bool is_divergent() const noexcept { return divergent > 0; }
};

/// Runs a single cell: fresh network, Z = 0, run_qsf, classification.
TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t q_index, std::size_t beta_index,
                      std::size_t trial, RunTrace* trace = nullptr);

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// All cells of the grid on cfg.workers threads. The result does not depend
/// on the worker count. The callback, if any, is serialized.
SweepResult run_experiment(const ExperimentConfig& cfg, const ProgressCallback& progress = {});

/// Row-major (q, beta) cell summaries. Throws if the result is empty.
std::vector<CellSummary> summarize(const SweepResult& result);

struct SelfCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SelfCheck> self_check(const SweepResult& result);

/// sweep.csv: q,beta,trial,stream_id,final_distance,status,divergence_n
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);
SweepResult read_sweep_csv(const std::filesystem::path& path);

/// timings.csv: q,beta,trial,wall_time_s
void write_timings_csv(const SweepResult& result, const std::filesystem::path& path);

/// summary.csv (means, DIV for divergent cells), summary_stderr.csv and
/// summary_divergent.csv (divergent-trial counts) in Table-I layout.
void write_summary(const SweepResult& result, const std::filesystem::path& dir);

/// n,distance_to_target
void emit_trace(const RunTrace& trace, std::span<const double> target,
                const std::filesystem::path& path);

}  // namespace qsf
