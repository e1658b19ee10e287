#include "ofe/ml/model_network.hpp"

#include "ofe/errors.hpp"

#include <cmath>

namespace ofe {

MlModelNetwork::MlModelNetwork(Eigen::Index obs_dim, Eigen::Index action_dim,
                               Eigen::Index repr_dim, std::uint64_t seed, MlOptions options)
    : obs_dim_(obs_dim),
      action_dim_(action_dim),
      repr_dim_(repr_dim),
      options_(options),
      rng_(seed),
      enc_hidden_("ml.enc.hidden", obs_dim, options.hidden, Activation::relu, rng_),
      enc_out_("ml.enc.out", options.hidden, repr_dim, Activation::identity, rng_),
      pred_hidden_("ml.pred.hidden", repr_dim + action_dim, options.hidden, Activation::relu, rng_),
      z_head_("ml.pred.z", options.hidden, repr_dim, Activation::identity, rng_),
      r_head_("ml.pred.r", options.hidden, 1, Activation::identity, rng_) {
  if (!(options.lambda_m >= 0.0)) throw ConfigError("ml: lambda_m must be non-negative");
  optimizer_ = Adam(parameters(), options.adam);
}

Var MlModelNetwork::encode_obs(Tape& tape, Var obs, const EncodeOptions& options) {
  if (obs.cols() != obs_dim_) throw ConfigError("ml: observation width mismatch");
  require_finite(obs.value(), "ml input");
  return enc_out_.forward(tape, enc_hidden_.forward(tape, obs, options.track), options.track);
}

Var MlModelNetwork::encode_obs_action(Tape&, Var z_o, Var action, const EncodeOptions&) {
  if (z_o.cols() != repr_dim_ || action.cols() != action_dim_) {
    throw ConfigError("ml: representation/action width mismatch");
  }
  return concat(z_o, action);
}

std::vector<Parameter*> MlModelNetwork::representation_parameters() {
  auto out = enc_hidden_.parameters();
  auto more = enc_out_.parameters();
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

std::vector<Parameter*> MlModelNetwork::parameters() {
  auto out = representation_parameters();
  for (DenseLayer* layer : {&pred_hidden_, &z_head_, &r_head_}) {
    auto ps = layer->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

std::pair<Var, Var> MlModelNetwork::predict(Tape& tape, Var z_o, Var action, bool track) {
  Var h = pred_hidden_.forward(tape, concat(z_o, action), track);
  return {z_head_.forward(tape, h, track), r_head_.forward(tape, h, track)};
}

Var MlModelNetwork::ml_loss(Tape& tape, const Batch& batch, bool track) {
  if (batch.size() == 0) throw UsageError("ml: loss on an empty batch");
  const EncodeOptions enc{BnMode::train, track, false};
  Var z_o = encode_obs(tape, tape.constant(batch.obs), enc);
  auto [z_hat, r_hat] = predict(tape, z_o, tape.constant(batch.actions), track);
  // Target representation of o' enters as a constant.
  Matrix z_next = encode_obs_values(batch.next_obs, BnMode::eval);
  Matrix reward = batch.rewards;
  return ml_loss_terms(z_hat, tape.constant(std::move(z_next)), r_hat,
                       tape.constant(std::move(reward)), options_.lambda_m);
}

double MlModelNetwork::train_step(const Batch& batch) {
  try {
    optimizer_.zero_grad();
    Tape tape;
    Var loss = ml_loss(tape, batch, true);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) throw NumericError("non-finite model loss");
    tape.backward(loss);
    optimizer_.step();
    return value;
  } catch (const NumericError& e) {
    throw NumericError("ml train step " + std::to_string(optimizer_.step_count() + 1) + ": " +
                       e.what());
  }
}

double MlModelNetwork::auxiliary_loss(const Batch& batch, BnMode) {
  Tape tape;
  return ml_loss(tape, batch, false).value()(0, 0);
}

std::size_t MlModelNetwork::param_count() const {
  return enc_hidden_.param_count() + enc_out_.param_count() + pred_hidden_.param_count() +
         z_head_.param_count() + r_head_.param_count();
}

Var ml_loss_terms(Var z_hat, Var z_next, Var r_hat, Var reward, double lambda_m) {
  Var state_term = squared_error(z_hat, z_next);
  if (lambda_m == 0.0) return state_term;
  return add(state_term, scale(squared_error(r_hat, reward), lambda_m));
}

Eigen::Index ml_repr_dim(Eigen::Index obs_dim, MlVariant variant, int ofe_increment) {
  switch (variant) {
    case MlVariant::third:
      if (obs_dim < 3) throw ConfigError("ml: the one-third variant needs obs_dim >= 3");
      return obs_dim / 3;
    case MlVariant::ofe_like:
      if (ofe_increment < 0) throw ConfigError("ml: increment must be non-negative");
      return obs_dim + ofe_increment;
  }
  return obs_dim;
}

std::unique_ptr<MlModelNetwork> build_ml(Eigen::Index obs_dim, Eigen::Index action_dim,
                                         MlVariant variant, std::uint64_t seed, int ofe_increment,
                                         MlOptions options) {
  return std::make_unique<MlModelNetwork>(obs_dim, action_dim,
                                          ml_repr_dim(obs_dim, variant, ofe_increment), seed,
                                          options);
}

}  // namespace ofe
