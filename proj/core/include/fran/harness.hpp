#pragma once

// Experiment grid execution and CSV metrics.
//
// A cell is one (policy, seed) pair. Learned policies are trained with
// run_training and then evaluated greedily; closed-form policies are only
// evaluated. Every cell is scored on the same fresh evaluation episodes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fran/config.hpp"

namespace fran {

/// One CSV line. Cost, delay and energy are per-slot means (summed over MDs).
struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::uint64_t round = 0;
  double mean_reward = 0.0;
  double mean_cost = 0.0;
  double mean_delay = 0.0;
  double mean_energy = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

extern const char* const kMetricsHeader;  // "run_id,seed,round,mean_reward,..."

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

struct CellResult {
  std::string run_id;
  PolicyKind policy = PolicyKind::local;
  std::uint64_t seed = 0;
  /// Frozen-policy evaluation after training; round = rounds trained (0 for closed-form policies).
  MetricsRow final;
  /// Learned policies only: per round, the training reward and the greedy
  /// evaluation cost, delay and energy of the broadcast model.
  std::vector<MetricsRow> curve;
};

/// Mean and sample standard deviation over seeds for one (point, policy).
struct AggregateRow {
  std::string sweep;  // "experiment", "mds", "fap_cpu"
  double x = 0.0;     // sweep coordinate; 0 for plain experiments
  PolicyKind policy = PolicyKind::local;
  std::size_t seeds = 0;
  double reward_mean = 0.0, reward_std = 0.0;
  double cost_mean = 0.0, cost_std = 0.0;
  double delay_mean = 0.0, delay_std = 0.0;
  double energy_mean = 0.0, energy_std = 0.0;
};

extern const char* const kAggregateHeader;

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);

/// Aggregates the final rows of cells that share a policy, in first-seen policy order.
std::vector<AggregateRow> aggregate(const std::vector<CellResult>& cells, const std::string& sweep,
                                    double x);

struct ExperimentResult {
  std::vector<CellResult> cells;  // policy-major, then seed, in config order
  std::vector<AggregateRow> aggregate;
};

/// Progress messages (one line each); may be called from worker threads, one at a time.
using ProgressFn = std::function<void(const std::string&)>;

/// Evaluation root for the final frozen-policy evaluation of a seed.
std::uint64_t final_eval_root(std::uint64_t seed);

/// Trains (if learned) and evaluates one cell. `checkpoint_dir` may be empty.
CellResult run_cell(const ExperimentConfig& config, PolicyKind policy, std::uint64_t seed,
                    const std::string& run_id, const std::filesystem::path& checkpoint_dir = {});

/// Runs every (policy, seed) cell using up to config.workers threads. Writes
/// <run_id>.csv and, for learned policies, <run_id>_curve.csv per cell plus
/// aggregate.csv into config.output_dir. Throws Error listing failed cells
/// after writing the outputs of the cells that succeeded.
ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// One experiment per M in config.sweep_mds (outputs under <out>/mds_<M>/),
/// plus <out>/sweep_mds.csv.
std::vector<AggregateRow> sweep_mds(const ExperimentConfig& config, const ProgressFn& progress = {});
/// One experiment per F-AP CPU frequency (outputs under <out>/fap_cpu_<GHz>/),
/// plus <out>/sweep_fap_cpu.csv.
std::vector<AggregateRow> sweep_fap_cpu(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Learned policies only; writes the per-round curves of every cell to
/// <out>/convergence.csv and returns them in cell order.
std::vector<MetricsRow> convergence_run(const ExperimentConfig& config, const ProgressFn& progress = {});

}  // namespace fran
