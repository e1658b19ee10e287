#pragma once

#include "ofe/agents/agent.hpp"

namespace ofe {

struct Td3Options {
  std::vector<Eigen::Index> hidden{256, 256};
  double gamma = 0.99;
  double tau = 0.005;
  double learning_rate = 3e-4;
  /// Exploration and target-smoothing noise, in unit-box action units.
  double explore_noise = 0.1;
  double smooth_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;
};

/// Twin delayed DDPG: clipped double-Q targets with smoothed target actions;
/// the actor and all targets move once every `policy_delay` critic updates.
class Td3Agent final : public Agent {
 public:
  Td3Agent(const AgentDims& dims, std::uint64_t seed, Td3Options options = {});
  Td3Agent(const Td3Agent&) = delete;
  Td3Agent& operator=(const Td3Agent&) = delete;

  Matrix act(const Matrix& z_o, ActMode mode, Rng& rng) override;
  UpdateDiagnostics update(Extractor& extractor, const Batch& batch, Rng& rng,
                           Adam* extractor_optimizer = nullptr) override;

  std::string kind() const override { return "td3"; }
  std::vector<Parameter*> parameters() override;
  std::uint64_t updates() const override { return updates_; }
  std::vector<NamedArray> state() override;

  /// Deterministic action mu(z_o) in the unit box, without noise.
  Matrix mean_action(const Matrix& z_o);
  /// `smoothing` is the raw N(0, 1) draw (batch x action_dim) before scaling and clipping.
  Matrix critic_targets(Extractor& extractor, const Batch& batch, const Matrix& smoothing);
  Var critic_loss(Tape& tape, Extractor& extractor, const Batch& batch, const Matrix& targets,
                  const EncodeOptions& encode);
  /// -mean Q1(z_o, mu(z_o)) with critic and extractor parameters held fixed.
  Var actor_loss(Tape& tape, Extractor& extractor, const Matrix& obs);

  const Td3Options& options() const { return options_; }
  Mlp& actor() { return actor_; }
  Mlp& critic(int i) { return i == 0 ? q1_ : q2_; }
  Mlp& target_critic(int i) { return i == 0 ? q1_target_ : q2_target_; }
  Mlp& target_actor() { return actor_target_; }
  void update_targets(double tau);

 private:
  std::vector<Parameter*> critic_parameters();

  AgentDims dims_;
  Td3Options options_;
  ActionScaler scaler_;
  Rng init_rng_;
  Mlp actor_;
  Mlp actor_target_;
  Mlp q1_;
  Mlp q2_;
  Mlp q1_target_;
  Mlp q2_target_;
  Adam actor_opt_;
  Adam critic_opt_;
  std::uint64_t updates_ = 0;
};

}  // namespace ofe
