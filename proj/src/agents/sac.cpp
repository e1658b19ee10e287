#include "ofe/agents/sac.hpp"

#include "ofe/errors.hpp"

#include <cmath>
#include <numbers>

namespace ofe {
namespace {

const double kLog2 = std::log(2.0);
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

SacAgent::SacAgent(const AgentDims& dims, std::uint64_t seed, SacOptions options)
    : dims_(dims),
      options_(std::move(options)),
      target_entropy_(std::isnan(options_.target_entropy) ? -static_cast<double>(dims.action_dim)
                                                          : options_.target_entropy),
      scaler_(dims.action_low, dims.action_high),
      init_rng_(seed),
      actor_("sac.actor", dims.z_o_dim, options_.hidden, 2 * dims.action_dim, Activation::relu,
             Activation::identity, init_rng_),
      q1_("sac.q1", dims.z_oa_dim, options_.hidden, 1, Activation::relu, Activation::identity,
          init_rng_),
      q2_("sac.q2", dims.z_oa_dim, options_.hidden, 1, Activation::relu, Activation::identity,
          init_rng_),
      q1_target_("sac.q1_target", dims.z_oa_dim, options_.hidden, 1, Activation::relu,
                 Activation::identity, init_rng_),
      q2_target_("sac.q2_target", dims.z_oa_dim, options_.hidden, 1, Activation::relu,
                 Activation::identity, init_rng_),
      log_alpha_("sac.log_alpha", Matrix::Constant(1, 1, std::log(options_.initial_alpha))) {
  if (!(options_.initial_alpha > 0.0)) throw ConfigError("sac: initial alpha must be positive");
  update_targets(1.0);
  const AdamOptions adam{options_.learning_rate, 0.9, 0.999, 1e-8};
  actor_opt_ = Adam(actor_.parameters(), adam);
  critic_opt_ = Adam(critic_parameters(), adam);
  alpha_opt_ = Adam({&log_alpha_}, adam);
}

double SacAgent::alpha() const { return std::exp(log_alpha_.value(0, 0)); }

std::vector<Parameter*> SacAgent::critic_parameters() {
  auto out = q1_.parameters();
  auto q2 = q2_.parameters();
  out.insert(out.end(), q2.begin(), q2.end());
  return out;
}

std::vector<Parameter*> SacAgent::parameters() {
  auto out = actor_.parameters();
  auto critics = critic_parameters();
  out.insert(out.end(), critics.begin(), critics.end());
  out.push_back(&log_alpha_);
  return out;
}

std::vector<NamedArray> SacAgent::state() {
  auto out = Agent::state();
  for (Mlp* target : {&q1_target_, &q2_target_}) {
    for (auto* p : target->parameters()) out.push_back({p->name, p->value});
  }
  return out;
}

void SacAgent::update_targets(double tau) {
  q1_target_.polyak_from(q1_, tau);
  q2_target_.polyak_from(q2_, tau);
}

Matrix SacAgent::act(const Matrix& z_o, ActMode mode, Rng& rng) {
  const Eigen::Index k = dims_.action_dim;
  const Matrix out = actor_.predict(z_o);
  Matrix u = out.leftCols(k);
  if (mode == ActMode::explore) {
    Matrix log_std = out.rightCols(k).cwiseMax(options_.log_std_min).cwiseMin(options_.log_std_max);
    u += log_std.array().exp().matrix().cwiseProduct(normal_matrix(z_o.rows(), k, 1.0, rng));
  }
  Matrix a = u.array().tanh();
  return scaler_.clip(scaler_.to_env(a));
}

PolicySample SacAgent::sample(Tape& tape, Var z_o, const Matrix& noise, bool track) {
  const Eigen::Index k = dims_.action_dim;
  if (noise.rows() != z_o.rows() || noise.cols() != k) throw ConfigError("sac: noise shape mismatch");
  Var out = actor_.forward(tape, z_o, track);
  Var mean_u = slice_cols(out, 0, k);
  Var log_std = clamp(slice_cols(out, k, k), options_.log_std_min, options_.log_std_max);
  Var u = add(mean_u, mul(exp(log_std), tape.constant(noise)));
  Var action = tanh(u);
  // log N(u; mean, std) with (u - mean) / std == noise.
  Matrix gauss_const = (-0.5 * noise.array().square() - kHalfLog2Pi).matrix();
  Var log_prob = row_sum(sub(tape.constant(std::move(gauss_const)), log_std));
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  Var squash = scale(add_scalar(scale(add(u, softplus(scale(u, -2.0))), -1.0), kLog2), 2.0);
  log_prob = sub(log_prob, row_sum(squash));
  return {action, log_prob};
}

Matrix SacAgent::critic_targets(Extractor& extractor, const Batch& batch, const Matrix& next_noise) {
  Tape tape;
  const EncodeOptions enc{BnMode::train, false, false};
  Var z_next = extractor.encode_obs(tape, tape.constant(batch.next_obs), enc);
  PolicySample s = sample(tape, z_next, next_noise, false);
  Var a_env = scale_shift(s.action, scaler_.scale(), scaler_.shift());
  Var z_next_a = extractor.encode_obs_action(tape, z_next, a_env, enc);
  const Matrix q1 = q1_target_.forward(tape, z_next_a, false).value();
  const Matrix q2 = q2_target_.forward(tape, z_next_a, false).value();
  const Vector soft = q1.cwiseMin(q2).col(0) - alpha() * s.log_prob.value().col(0);
  Vector y = batch.rewards.array() +
             options_.gamma * (1.0 - batch.dones.array()) * soft.array();
  return y;
}

Var SacAgent::critic_loss(Tape& tape, Extractor& extractor, const Batch& batch,
                          const Matrix& targets, const EncodeOptions& encode) {
  Var z_o = extractor.encode_obs(tape, tape.constant(batch.obs), encode);
  Var z_oa = extractor.encode_obs_action(tape, z_o, tape.constant(batch.actions), encode);
  Var y = tape.constant(targets);
  Var q1 = q1_.forward(tape, z_oa, true);
  Var q2 = q2_.forward(tape, z_oa, true);
  return add(squared_error(q1, y), squared_error(q2, y));
}

Var SacAgent::actor_loss(Tape& tape, Extractor& extractor, const Matrix& obs, const Matrix& noise,
                         Matrix* log_prob_out) {
  const EncodeOptions enc{BnMode::train, false, false};
  Var z_o = extractor.encode_obs(tape, tape.constant(obs), enc);
  PolicySample s = sample(tape, z_o, noise, true);
  Var a_env = scale_shift(s.action, scaler_.scale(), scaler_.shift());
  Var z_oa = extractor.encode_obs_action(tape, z_o, a_env, enc);
  Var q = minimum(q1_.forward(tape, z_oa, false), q2_.forward(tape, z_oa, false));
  if (log_prob_out != nullptr) *log_prob_out = s.log_prob.value();
  return mean(sub(scale(s.log_prob, alpha()), q));
}

UpdateDiagnostics SacAgent::update(Extractor& extractor, const Batch& batch, Rng& rng,
                                   Adam* extractor_optimizer) {
  ++updates_;
  UpdateDiagnostics diag;
  diag.update_index = updates_;
  const Eigen::Index n = batch.size();
  const Eigen::Index k = dims_.action_dim;
  try {
    const bool coupled = extractor_optimizer != nullptr;
    const Matrix targets = critic_targets(extractor, batch, normal_matrix(n, k, 1.0, rng));
    {
      critic_opt_.zero_grad();
      if (coupled) extractor_optimizer->zero_grad();
      Tape tape;
      Var loss = critic_loss(tape, extractor, batch, targets,
                             EncodeOptions{BnMode::train, coupled, coupled});
      tape.backward(loss);
      critic_opt_.step();
      if (coupled) extractor_optimizer->step();
      diag.critic_loss = loss.value()(0, 0);
    }
    Matrix log_prob;
    {
      actor_opt_.zero_grad();
      Tape tape;
      Var loss = actor_loss(tape, extractor, batch.obs, normal_matrix(n, k, 1.0, rng), &log_prob);
      tape.backward(loss);
      actor_opt_.step();
      diag.actor_loss = loss.value()(0, 0);
      diag.actor_updated = true;
    }
    {
      alpha_opt_.zero_grad();
      Tape tape;
      Matrix shifted = log_prob.array() + target_entropy_;
      Var loss = scale(mean(mul_scalar(tape.constant(std::move(shifted)),
                                       tape.parameter(log_alpha_))), -1.0);
      tape.backward(loss);
      alpha_opt_.step();
    }
    update_targets(options_.tau);
    if (!std::isfinite(diag.critic_loss) || !std::isfinite(diag.actor_loss)) {
      throw NumericError("non-finite loss");
    }
  } catch (const NumericError& e) {
    throw NumericError("sac update " + std::to_string(updates_) + ": " + e.what());
  }
  diag.alpha = alpha();
  return diag;
}

}  // namespace ofe
