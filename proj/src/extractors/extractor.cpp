#include "ofe/extractors/extractor.hpp"

#include "ofe/errors.hpp"

namespace ofe {

double Extractor::train_step(const Batch&) {
  throw UsageError(kind() + " extractor has no auxiliary task to train");
}

double Extractor::auxiliary_loss(const Batch&, BnMode) {
  throw UsageError(kind() + " extractor has no auxiliary task");
}

std::vector<NamedArray> Extractor::state() {
  std::vector<NamedArray> out;
  for (auto* p : parameters()) out.push_back({p->name, p->value});
  return out;
}

void Extractor::load_state(const std::vector<NamedArray>& arrays) {
  auto params = parameters();
  if (arrays.size() != params.size()) throw ConfigError("extractor snapshot: array count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (arrays[i].name != params[i]->name ||
        arrays[i].value.rows() != params[i]->value.rows() ||
        arrays[i].value.cols() != params[i]->value.cols()) {
      throw ConfigError("extractor snapshot: mismatch at '" + arrays[i].name + "'");
    }
    params[i]->value = arrays[i].value;
  }
}

Matrix Extractor::encode_obs_values(const Matrix& obs, BnMode mode) {
  Tape tape;
  return encode_obs(tape, tape.constant(obs), EncodeOptions{mode, false, false}).value();
}

Matrix Extractor::encode_obs_action_values(const Matrix& obs, const Matrix& actions, BnMode mode) {
  Tape tape;
  const EncodeOptions opts{mode, false, false};
  Var z_o = encode_obs(tape, tape.constant(obs), opts);
  return encode_obs_action(tape, z_o, tape.constant(actions), opts).value();
}

RawExtractor::RawExtractor(Eigen::Index obs_dim, Eigen::Index action_dim)
    : obs_dim_(obs_dim), action_dim_(action_dim) {
  if (obs_dim <= 0 || action_dim <= 0) throw ConfigError("raw extractor: dims must be positive");
}

Var RawExtractor::encode_obs(Tape&, Var obs, const EncodeOptions&) {
  if (obs.cols() != obs_dim_) throw ConfigError("raw extractor: observation width mismatch");
  require_finite(obs.value(), "raw extractor input");
  return obs;
}

Var RawExtractor::encode_obs_action(Tape&, Var z_o, Var action, const EncodeOptions&) {
  if (z_o.cols() != obs_dim_ || action.cols() != action_dim_) {
    throw ConfigError("raw extractor: input width mismatch");
  }
  return concat(z_o, action);
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericError(what + ": non-finite values");
}

}  // namespace ofe
