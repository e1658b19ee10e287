#pragma once

#include "ofe/gradkit/layers.hpp"
#include "ofe/replay/replay_buffer.hpp"

#include <string>
#include <vector>

namespace ofe {

/// How a representation is produced on a tape.
struct EncodeOptions {
  BnMode mode = BnMode::train;
  /// Enter extractor parameters as tracked leaves so gradients reach them.
  bool track = false;
  /// Let train-mode batch norm advance its moving statistics.
  bool update_stats = false;
};

/// Supplies z_o = phi_o(o) and z_oa = phi_oa(z_o, a) to an agent.
///
/// Agents call the encode functions with `track == false`, which detaches the
/// representation from the extractor parameters while still letting gradients
/// flow back to the action input.
class Extractor {
 public:
  virtual ~Extractor() = default;

  virtual std::string kind() const = 0;
  virtual Eigen::Index obs_dim() const = 0;
  virtual Eigen::Index action_dim() const = 0;
  virtual Eigen::Index z_o_dim() const = 0;
  virtual Eigen::Index z_oa_dim() const = 0;

  virtual Var encode_obs(Tape& tape, Var obs, const EncodeOptions& options) = 0;
  virtual Var encode_obs_action(Tape& tape, Var z_o, Var action, const EncodeOptions& options) = 0;

  /// Parameters of phi_o and phi_oa.
  virtual std::vector<Parameter*> representation_parameters() = 0;
  /// Everything the auxiliary task trains (theta_aux).
  virtual std::vector<Parameter*> parameters() = 0;

  virtual bool has_auxiliary_task() const { return false; }
  /// One optimizer step on the auxiliary objective. Returns the loss measured
  /// before the step.
  virtual double train_step(const Batch& batch);
  /// Auxiliary loss on a batch without touching parameters or statistics.
  virtual double auxiliary_loss(const Batch& batch, BnMode mode);
  /// Number of train_step calls so far.
  virtual std::uint64_t train_steps() const { return 0; }

  /// Parameters and running statistics, in a stable order.
  virtual std::vector<NamedArray> state();
  virtual void load_state(const std::vector<NamedArray>& arrays);

  Matrix encode_obs_values(const Matrix& obs, BnMode mode);
  Matrix encode_obs_action_values(const Matrix& obs, const Matrix& actions, BnMode mode);
};

/// Identity representation: z_o = o, z_oa = [o, a].
class RawExtractor final : public Extractor {
 public:
  RawExtractor(Eigen::Index obs_dim, Eigen::Index action_dim);

  std::string kind() const override { return "raw"; }
  Eigen::Index obs_dim() const override { return obs_dim_; }
  Eigen::Index action_dim() const override { return action_dim_; }
  Eigen::Index z_o_dim() const override { return obs_dim_; }
  Eigen::Index z_oa_dim() const override { return obs_dim_ + action_dim_; }

  Var encode_obs(Tape& tape, Var obs, const EncodeOptions& options) override;
  Var encode_obs_action(Tape& tape, Var z_o, Var action, const EncodeOptions& options) override;

  std::vector<Parameter*> representation_parameters() override { return {}; }
  std::vector<Parameter*> parameters() override { return {}; }

 private:
  Eigen::Index obs_dim_;
  Eigen::Index action_dim_;
};

/// Throws NumericError if any entry is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);

}  // namespace ofe
