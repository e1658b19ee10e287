#pragma once

#include "ofe/envs/env.hpp"
#include "ofe/extractors/extractor.hpp"
#include "ofe/gradkit/adam.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ofe {

enum class ActMode { explore, evaluate };

/// Maps representations z_o (one row per query) to environment-scale actions.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Matrix act(const Matrix& z_o, ActMode mode, Rng& rng) = 0;
};

struct UpdateDiagnostics {
  std::uint64_t update_index = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  bool actor_updated = false;
};

/// Affine map between the unit box [-1, 1]^k the networks work in and the
/// environment's action box.
class ActionScaler {
 public:
  ActionScaler() = default;
  ActionScaler(const Vector& low, const Vector& high);

  Matrix to_env(const Matrix& unit) const;
  Matrix to_unit(const Matrix& env) const;
  /// Clips rows to [low, high].
  Matrix clip(const Matrix& env) const;
  const RowVector& scale() const { return scale_; }
  const RowVector& shift() const { return shift_; }
  const RowVector& low() const { return low_; }
  const RowVector& high() const { return high_; }

 private:
  RowVector low_, high_, scale_, shift_;
};

struct AgentDims {
  Eigen::Index z_o_dim = 0;
  Eigen::Index z_oa_dim = 0;
  Eigen::Index action_dim = 0;
  Vector action_low;
  Vector action_high;
};

AgentDims agent_dims(const Extractor& extractor, const EnvSpec& env);

/// Off-policy actor-critic agent whose networks read extractor representations:
/// the actor sees z_o, the critics see z_oa.
class Agent : public Policy {
 public:
  /// One gradient step. Representations come from `extractor` detached from its
  /// parameters; when `extractor_optimizer` is given, the critic loss is also
  /// backpropagated into the extractor and that optimizer is stepped.
  virtual UpdateDiagnostics update(Extractor& extractor, const Batch& batch, Rng& rng,
                                   Adam* extractor_optimizer = nullptr) = 0;

  virtual std::string kind() const = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::uint64_t updates() const = 0;
  virtual std::vector<NamedArray> state();
  std::size_t param_count() { return count_parameters(parameters()); }
};

/// Mean undiscounted return over `episodes` evaluation episodes (reset seeds
/// seed_base, seed_base + 1, ...), acting in evaluate mode on eval-mode
/// representations.
double evaluate_policy(Policy& policy, Extractor& extractor, Env& env, int episodes,
                       std::uint64_t seed_base);

/// Parameters of a policy network with the given hidden widths and an
/// action_dim-wide output layer (weights + biases).
std::size_t policy_param_count(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
                               Eigen::Index action_dim);

/// Largest uniform hidden width w (with `layers` hidden layers) whose policy
/// parameter count does not exceed `target_params`.
Eigen::Index same_params_width(Eigen::Index input_dim, Eigen::Index action_dim,
                               std::size_t target_params, int layers = 2);

}  // namespace ofe
