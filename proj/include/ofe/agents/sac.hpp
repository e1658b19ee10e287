#pragma once

#include "ofe/agents/agent.hpp"

#include <limits>

namespace ofe {

struct SacOptions {
  std::vector<Eigen::Index> hidden{256, 256};
  double gamma = 0.99;
  double tau = 0.005;
  double learning_rate = 3e-4;
  double initial_alpha = 1.0;
  /// NaN selects -action_dim.
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
  double log_std_min = -20.0;
  double log_std_max = 2.0;
};

/// Reparameterized draw from the squashed Gaussian policy, in the unit box.
struct PolicySample {
  Var action;    // tanh(mean + std * noise), batch x action_dim
  Var log_prob;  // batch x 1, includes the tanh correction
};

/// Soft actor-critic with twin critics, polyak-averaged targets and automatic
/// temperature tuning (alpha = exp(log_alpha)).
class SacAgent final : public Agent {
 public:
  SacAgent(const AgentDims& dims, std::uint64_t seed, SacOptions options = {});
  SacAgent(const SacAgent&) = delete;
  SacAgent& operator=(const SacAgent&) = delete;

  Matrix act(const Matrix& z_o, ActMode mode, Rng& rng) override;
  UpdateDiagnostics update(Extractor& extractor, const Batch& batch, Rng& rng,
                           Adam* extractor_optimizer = nullptr) override;

  std::string kind() const override { return "sac"; }
  std::vector<Parameter*> parameters() override;
  std::uint64_t updates() const override { return updates_; }
  std::vector<NamedArray> state() override;

  /// Draws with explicit standard-normal `noise` (batch x action_dim).
  PolicySample sample(Tape& tape, Var z_o, const Matrix& noise, bool track);
  /// r + gamma * (1 - done) * (min target Q(z_o', a') - alpha * log pi(a'|z_o')).
  Matrix critic_targets(Extractor& extractor, const Batch& batch, const Matrix& next_noise);
  /// Sum over both critics of the batch-mean squared error to `targets`.
  Var critic_loss(Tape& tape, Extractor& extractor, const Batch& batch, const Matrix& targets,
                  const EncodeOptions& encode);
  /// mean(alpha * log pi - min Q) with critic and extractor parameters held fixed.
  Var actor_loss(Tape& tape, Extractor& extractor, const Matrix& obs, const Matrix& noise,
                 Matrix* log_prob_out = nullptr);

  double alpha() const;
  double target_entropy() const { return target_entropy_; }
  const SacOptions& options() const { return options_; }
  Mlp& actor() { return actor_; }
  Mlp& critic(int i) { return i == 0 ? q1_ : q2_; }
  Mlp& target_critic(int i) { return i == 0 ? q1_target_ : q2_target_; }
  Parameter& log_alpha() { return log_alpha_; }
  const ActionScaler& scaler() const { return scaler_; }
  /// Polyak step of both target critics with coefficient `tau`.
  void update_targets(double tau);

 private:
  std::vector<Parameter*> critic_parameters();

  AgentDims dims_;
  SacOptions options_;
  double target_entropy_;
  ActionScaler scaler_;
  Rng init_rng_;
  Mlp actor_;
  Mlp q1_;
  Mlp q2_;
  Mlp q1_target_;
  Mlp q2_target_;
  Parameter log_alpha_;
  Adam actor_opt_;
  Adam critic_opt_;
  Adam alpha_opt_;
  std::uint64_t updates_ = 0;
};

}  // namespace ofe
