#include "ofe/agents/td3.hpp"

#include "ofe/errors.hpp"

#include <cmath>

namespace ofe {

Td3Agent::Td3Agent(const AgentDims& dims, std::uint64_t seed, Td3Options options)
    : dims_(dims),
      options_(std::move(options)),
      scaler_(dims.action_low, dims.action_high),
      init_rng_(seed),
      actor_("td3.actor", dims.z_o_dim, options_.hidden, dims.action_dim, Activation::relu,
             Activation::tanh, init_rng_),
      actor_target_("td3.actor_target", dims.z_o_dim, options_.hidden, dims.action_dim,
                    Activation::relu, Activation::tanh, init_rng_),
      q1_("td3.q1", dims.z_oa_dim, options_.hidden, 1, Activation::relu, Activation::identity,
          init_rng_),
      q2_("td3.q2", dims.z_oa_dim, options_.hidden, 1, Activation::relu, Activation::identity,
          init_rng_),
      q1_target_("td3.q1_target", dims.z_oa_dim, options_.hidden, 1, Activation::relu,
                 Activation::identity, init_rng_),
      q2_target_("td3.q2_target", dims.z_oa_dim, options_.hidden, 1, Activation::relu,
                 Activation::identity, init_rng_) {
  if (options_.policy_delay < 1) throw ConfigError("td3: policy_delay must be at least 1");
  update_targets(1.0);
  const AdamOptions adam{options_.learning_rate, 0.9, 0.999, 1e-8};
  actor_opt_ = Adam(actor_.parameters(), adam);
  critic_opt_ = Adam(critic_parameters(), adam);
}

std::vector<Parameter*> Td3Agent::critic_parameters() {
  auto out = q1_.parameters();
  auto q2 = q2_.parameters();
  out.insert(out.end(), q2.begin(), q2.end());
  return out;
}

std::vector<Parameter*> Td3Agent::parameters() {
  auto out = actor_.parameters();
  auto critics = critic_parameters();
  out.insert(out.end(), critics.begin(), critics.end());
  return out;
}

std::vector<NamedArray> Td3Agent::state() {
  auto out = Agent::state();
  for (Mlp* target : {&actor_target_, &q1_target_, &q2_target_}) {
    for (auto* p : target->parameters()) out.push_back({p->name, p->value});
  }
  return out;
}

void Td3Agent::update_targets(double tau) {
  actor_target_.polyak_from(actor_, tau);
  q1_target_.polyak_from(q1_, tau);
  q2_target_.polyak_from(q2_, tau);
}

Matrix Td3Agent::mean_action(const Matrix& z_o) { return actor_.predict(z_o); }

Matrix Td3Agent::act(const Matrix& z_o, ActMode mode, Rng& rng) {
  Matrix a = mean_action(z_o);
  if (mode == ActMode::explore) {
    a += normal_matrix(a.rows(), a.cols(), options_.explore_noise, rng);
    a = a.cwiseMax(-1.0).cwiseMin(1.0);
  }
  return scaler_.clip(scaler_.to_env(a));
}

Matrix Td3Agent::critic_targets(Extractor& extractor, const Batch& batch, const Matrix& smoothing) {
  if (smoothing.rows() != batch.size() || smoothing.cols() != dims_.action_dim) {
    throw ConfigError("td3: smoothing noise shape mismatch");
  }
  const Matrix z_next = extractor.encode_obs_values(batch.next_obs, BnMode::train);
  Matrix noise = (smoothing * options_.smooth_noise)
                     .cwiseMax(-options_.noise_clip)
                     .cwiseMin(options_.noise_clip);
  Matrix a_next = (actor_target_.predict(z_next) + noise).cwiseMax(-1.0).cwiseMin(1.0);
  Tape tape;
  const EncodeOptions enc{BnMode::train, false, false};
  Var z_next_a = extractor.encode_obs_action(tape, tape.constant(z_next),
                                             tape.constant(scaler_.to_env(a_next)), enc);
  const Matrix q1 = q1_target_.forward(tape, z_next_a, false).value();
  const Matrix q2 = q2_target_.forward(tape, z_next_a, false).value();
  Vector y = batch.rewards.array() +
             options_.gamma * (1.0 - batch.dones.array()) * q1.cwiseMin(q2).col(0).array();
  return y;
}

Var Td3Agent::critic_loss(Tape& tape, Extractor& extractor, const Batch& batch,
                          const Matrix& targets, const EncodeOptions& encode) {
  Var z_o = extractor.encode_obs(tape, tape.constant(batch.obs), encode);
  Var z_oa = extractor.encode_obs_action(tape, z_o, tape.constant(batch.actions), encode);
  Var y = tape.constant(targets);
  return add(squared_error(q1_.forward(tape, z_oa, true), y),
             squared_error(q2_.forward(tape, z_oa, true), y));
}

Var Td3Agent::actor_loss(Tape& tape, Extractor& extractor, const Matrix& obs) {
  const EncodeOptions enc{BnMode::train, false, false};
  Var z_o = extractor.encode_obs(tape, tape.constant(obs), enc);
  Var a = actor_.forward(tape, z_o, true);
  Var a_env = scale_shift(a, scaler_.scale(), scaler_.shift());
  Var z_oa = extractor.encode_obs_action(tape, z_o, a_env, enc);
  return scale(mean(q1_.forward(tape, z_oa, false)), -1.0);
}

UpdateDiagnostics Td3Agent::update(Extractor& extractor, const Batch& batch, Rng& rng,
                                   Adam* extractor_optimizer) {
  ++updates_;
  UpdateDiagnostics diag;
  diag.update_index = updates_;
  try {
    const bool coupled = extractor_optimizer != nullptr;
    const Matrix targets =
        critic_targets(extractor, batch, normal_matrix(batch.size(), dims_.action_dim, 1.0, rng));
    critic_opt_.zero_grad();
    if (coupled) extractor_optimizer->zero_grad();
    {
      Tape tape;
      Var loss = critic_loss(tape, extractor, batch, targets,
                             EncodeOptions{BnMode::train, coupled, coupled});
      tape.backward(loss);
      critic_opt_.step();
      if (coupled) extractor_optimizer->step();
      diag.critic_loss = loss.value()(0, 0);
    }
    if (updates_ % static_cast<std::uint64_t>(options_.policy_delay) == 0) {
      actor_opt_.zero_grad();
      Tape tape;
      Var loss = actor_loss(tape, extractor, batch.obs);
      tape.backward(loss);
      actor_opt_.step();
      diag.actor_loss = loss.value()(0, 0);
      diag.actor_updated = true;
      update_targets(options_.tau);
    }
    if (!std::isfinite(diag.critic_loss) || !std::isfinite(diag.actor_loss)) {
      throw NumericError("non-finite loss");
    }
  } catch (const NumericError& e) {
    throw NumericError("td3 update " + std::to_string(updates_) + ": " + e.what());
  }
  return diag;
}

}  // namespace ofe
