#include "ofe/agents/agent.hpp"

#include "ofe/errors.hpp"

namespace ofe {

ActionScaler::ActionScaler(const Vector& low, const Vector& high) {
  if (low.size() != high.size() || low.size() == 0) {
    throw ConfigError("action scaler: bounds must be non-empty and of equal size");
  }
  if (!(low.array() < high.array()).all()) {
    throw ConfigError("action scaler: low must be below high in every dimension");
  }
  low_ = low.transpose();
  high_ = high.transpose();
  scale_ = (high_ - low_) / 2.0;
  shift_ = (high_ + low_) / 2.0;
}

Matrix ActionScaler::to_env(const Matrix& unit) const {
  Matrix out = unit.array().rowwise() * scale_.array();
  out.rowwise() += shift_;
  return out;
}

Matrix ActionScaler::to_unit(const Matrix& env) const {
  Matrix out = env.rowwise() - shift_;
  out.array().rowwise() /= scale_.array();
  return out;
}

Matrix ActionScaler::clip(const Matrix& env) const {
  Matrix out = env;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i) = out.row(i).cwiseMax(low_).cwiseMin(high_);
  }
  return out;
}

AgentDims agent_dims(const Extractor& extractor, const EnvSpec& env) {
  if (extractor.obs_dim() != env.obs_dim || extractor.action_dim() != env.action_dim) {
    throw ConfigError("extractor dimensions do not match environment '" + env.name + "'");
  }
  return AgentDims{extractor.z_o_dim(), extractor.z_oa_dim(), env.action_dim, env.action_low,
                   env.action_high};
}

std::vector<NamedArray> Agent::state() {
  std::vector<NamedArray> out;
  for (auto* p : parameters()) out.push_back({p->name, p->value});
  return out;
}

double evaluate_policy(Policy& policy, Extractor& extractor, Env& env, int episodes,
                       std::uint64_t seed_base) {
  if (episodes <= 0) throw ConfigError("evaluate_policy: episodes must be positive");
  Rng rng(seed_base);
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    Vector obs = env.reset(seed_base + static_cast<std::uint64_t>(ep));
    double ret = 0.0;
    while (!env.episode_over()) {
      Matrix o = obs.transpose();
      Matrix z = extractor.encode_obs_values(o, BnMode::eval);
      Matrix a = policy.act(z, ActMode::evaluate, rng);
      const Transition t = env.step(a.row(0).transpose());
      ret += t.reward;
      obs = t.next_obs;
    }
    total += ret;
  }
  return total / episodes;
}

std::size_t policy_param_count(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
                               Eigen::Index action_dim) {
  return mlp_param_count(input_dim, hidden, action_dim);
}

Eigen::Index same_params_width(Eigen::Index input_dim, Eigen::Index action_dim,
                               std::size_t target_params, int layers) {
  if (layers <= 0) throw ConfigError("same_params_width: layers must be positive");
  auto count = [&](Eigen::Index w) {
    return policy_param_count(input_dim, std::vector<Eigen::Index>(static_cast<std::size_t>(layers), w),
                              action_dim);
  };
  if (count(1) > target_params) {
    throw ConfigError("same_params_width: target below the smallest network");
  }
  Eigen::Index w = 1;
  while (count(w + 1) <= target_params) ++w;
  return w;
}

}  // namespace ofe
