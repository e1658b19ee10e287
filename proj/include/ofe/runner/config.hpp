#pragma once

#include "ofe/extractors/arch_spec.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ofe {

struct Ablations {
  bool no_bn = false;
  bool no_aux = false;
  bool same_params = false;
  bool freeze_ofe = false;
  /// Allows more than one of the four flags at once.
  bool combine = false;
  /// Per-layer widths for sweep-dim (8-layer densenet).
  std::vector<int> dim_sweep;
};

/// Everything one experiment needs. Loaded from a flat "key = value" file
/// ('#' starts a comment) and overridden by "key=value" strings.
///
/// Keys:
///   env, agent (sac|td3), extractor (ofe|raw|ml_third|ml_ofelike)
///   arch (manual|auto), connectivity, layers, increment, activation, batch_norm
///   seeds (comma list), total_steps, warmup_steps, pretrain_steps (-1: = warmup_steps)
///   eval_interval, eval_episodes, actual_score_window, batch_size, buffer_capacity
///   hidden (comma list), learning_rate, ofe_learning_rate, gamma, tau
///   target_score (stop once a step score reaches it; empty disables)
///   no_bn, no_aux, same_params, freeze_ofe, combine_ablations, dim_sweep (comma list)
///   corpus_train, corpus_test, arch_train_steps, arch_seeds (used by arch=auto)
///   output_dir, label
struct ExperimentConfig {
  std::string env = "pendulum";
  std::string agent = "sac";
  std::string extractor = "ofe";

  bool auto_arch = false;
  Connectivity connectivity = Connectivity::densenet;
  int layers = 2;
  int increment = 32;
  Activation activation = Activation::swish;
  bool batch_norm = true;

  std::vector<std::uint64_t> seeds{0};
  std::size_t total_steps = 30000;
  std::size_t warmup_steps = 1000;
  long pretrain_steps = -1;
  std::size_t eval_interval = 1000;
  int eval_episodes = 10;
  std::size_t actual_score_window = 10000;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 100000;

  std::vector<Eigen::Index> hidden{256, 256};
  double learning_rate = 3e-4;
  double ofe_learning_rate = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  double target_score = std::numeric_limits<double>::quiet_NaN();

  Ablations ablations;

  std::size_t corpus_train = 10000;
  std::size_t corpus_test = 2000;
  std::size_t arch_train_steps = 10000;
  int arch_seeds = 5;

  std::filesystem::path output_dir = "runs";
  /// Names the configuration in plots and run directories; derived when empty.
  std::string label;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
  std::size_t effective_pretrain_steps() const;
  std::string effective_label() const;
};

/// Applies one "key=value" assignment. Throws ConfigError on unknown keys or bad values.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& assignments);
/// Round-trips through parse_config_text.
std::string to_config_text(const ExperimentConfig& config);

}  // namespace ofe
