#pragma once

#include "ofe/agents/agent.hpp"
#include "ofe/archsearch/archsearch.hpp"
#include "ofe/runner/config.hpp"

#include <memory>

namespace ofe {

/// Seeds per purpose, derived from the master seed so that changing how one
/// stream is consumed leaves the others untouched.
enum class Stream : std::uint32_t { env = 1, explore, sample, agent, extractor, eval, init };
std::uint64_t derive_seed(std::uint64_t master, Stream stream);

/// Concrete wiring after ablations are applied.
struct RunPlan {
  ExperimentConfig config;
  /// "ofe", "raw", "ml_third" or "ml_ofelike" after ablation.
  std::string extractor_kind;
  std::optional<ArchSpec> arch;
  std::vector<Eigen::Index> agent_hidden;
  bool aux_updates = true;
  bool pretrain = true;
  bool coupled_extractor = false;
  /// Set by same_params: parameter target the widened agent matches.
  std::size_t same_params_target = 0;
};

/// Resolves ablation flags into a plan. Throws ConfigError for an invalid
/// combination or a flag that does not apply to the configured extractor.
RunPlan apply_ablation(const ExperimentConfig& config);

/// Architecture from the manual fields, or from select_architecture over
/// default_grid when arch=auto.
ArchSpec resolve_arch(const ExperimentConfig& config, const EnvSpec& env);

std::unique_ptr<Extractor> build_extractor(const RunPlan& plan, const EnvSpec& env,
                                           const std::vector<Eigen::Index>& excluded,
                                           std::uint64_t seed);
std::unique_ptr<Agent> build_agent(const RunPlan& plan, const AgentDims& dims, std::uint64_t seed);

struct MetricRow {
  std::size_t env_step = 0;
  double step_score = 0.0;
  double actual_score = std::numeric_limits<double>::quiet_NaN();
  double aux_loss = std::numeric_limits<double>::quiet_NaN();
  double critic_loss = std::numeric_limits<double>::quiet_NaN();
  double actor_loss = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t aux_updates = 0;
  std::uint64_t agent_updates = 0;
};

struct RunResult {
  std::filesystem::path run_dir;
  std::vector<MetricRow> rows;
  std::uint64_t aux_updates = 0;
  std::uint64_t agent_updates = 0;
  std::size_t env_steps = 0;
  /// First env step whose step score reached target_score, if any.
  std::optional<std::size_t> reached_target_at;
  std::size_t extractor_params = 0;
  std::size_t agent_params = 0;
  std::vector<Eigen::Index> agent_hidden;
  /// Nonzero under same_params.
  std::size_t same_params_target = 0;
  std::vector<NamedArray> extractor_after_pretrain;
  std::vector<NamedArray> extractor_final;
};

/// Full training run for one seed: warmup, extractor pretraining, then interleaved
/// extractor and agent updates. Writes metrics.csv, timing.csv,
/// config.txt, arch.txt (when an OFENet is used) and final snapshots under
/// `run_dir`. On numeric divergence a diagnostic line is appended to the CSV,
/// snapshots from the last evaluation are kept, and NumericError is rethrown.
RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         const std::filesystem::path& run_dir);

/// Runs every seed of `config` into output_dir/label/seed<k>.
std::vector<RunResult> run_all_seeds(const ExperimentConfig& config, unsigned jobs = 1);

struct DimSweepRow {
  int width = 0;
  Eigen::Index z_o_dim = 0;
  std::vector<double> final_step_scores;
};

/// One run set per per-layer width with an 8-layer densenet (increment 8w).
/// Writes output_dir/dim_sweep.csv.
std::vector<DimSweepRow> dim_sweep(const ExperimentConfig& config, const std::vector<int>& widths,
                                   unsigned jobs = 1);

/// Metrics CSV text (schema header included) for the given rows.
std::string metrics_csv(const std::string& label, const std::vector<MetricRow>& rows);

}  // namespace ofe
