#pragma once

#include "ofe/extractors/extractor.hpp"
#include "ofe/gradkit/adam.hpp"

#include <cstdint>
#include <memory>

namespace ofe {

enum class MlVariant { third, ofe_like };

struct MlOptions {
  Eigen::Index hidden = 100;
  double lambda_m = 10.0;
  AdamOptions adam{1e-3, 0.9, 0.999, 1e-8};
};

/// Model network baseline: an encoder o -> z_o and a predictor
/// [z_o, a] -> (z_hat', r_hat) trained on
///   L_m = |z(o') - z_hat'|^2 + lambda_m * (r - r_hat)^2
/// with z(o') treated as a fixed target. Agents see z_o and z_oa = [z_o, a].
class MlModelNetwork final : public Extractor {
 public:
  MlModelNetwork(Eigen::Index obs_dim, Eigen::Index action_dim, Eigen::Index repr_dim,
                 std::uint64_t seed, MlOptions options = {});
  MlModelNetwork(const MlModelNetwork&) = delete;
  MlModelNetwork& operator=(const MlModelNetwork&) = delete;

  std::string kind() const override { return "ml"; }
  Eigen::Index obs_dim() const override { return obs_dim_; }
  Eigen::Index action_dim() const override { return action_dim_; }
  Eigen::Index z_o_dim() const override { return repr_dim_; }
  Eigen::Index z_oa_dim() const override { return repr_dim_ + action_dim_; }
  Eigen::Index repr_dim() const { return repr_dim_; }
  double lambda_m() const { return options_.lambda_m; }

  Var encode_obs(Tape& tape, Var obs, const EncodeOptions& options) override;
  Var encode_obs_action(Tape& tape, Var z_o, Var action, const EncodeOptions& options) override;

  std::vector<Parameter*> representation_parameters() override;
  std::vector<Parameter*> parameters() override;

  bool has_auxiliary_task() const override { return true; }
  double train_step(const Batch& batch) override;
  /// L_m on the batch.
  double auxiliary_loss(const Batch& batch, BnMode mode) override;
  std::uint64_t train_steps() const override { return optimizer_.step_count(); }

  /// Predicted next representation and reward for (z_o, a).
  std::pair<Var, Var> predict(Tape& tape, Var z_o, Var action, bool track);
  /// Records L_m on `tape`; parameters tracked when `track` is set.
  Var ml_loss(Tape& tape, const Batch& batch, bool track);

  std::size_t param_count() const;

 private:
  Eigen::Index obs_dim_;
  Eigen::Index action_dim_;
  Eigen::Index repr_dim_;
  MlOptions options_;
  Rng rng_;
  DenseLayer enc_hidden_;
  DenseLayer enc_out_;
  DenseLayer pred_hidden_;
  DenseLayer z_head_;
  DenseLayer r_head_;
  Adam optimizer_;
};

/// Batch mean of |z_hat - z_next|^2 + lambda * (r_hat - r)^2.
Var ml_loss_terms(Var z_hat, Var z_next, Var r_hat, Var reward, double lambda_m);

/// Representation width of a variant: floor(obs_dim / 3) for `third`,
/// obs_dim + ofe_increment for `ofe_like`.
Eigen::Index ml_repr_dim(Eigen::Index obs_dim, MlVariant variant, int ofe_increment);

/// Throws ConfigError when obs_dim < 3 for the `third` variant.
std::unique_ptr<MlModelNetwork> build_ml(Eigen::Index obs_dim, Eigen::Index action_dim,
                                         MlVariant variant, std::uint64_t seed,
                                         int ofe_increment = 240, MlOptions options = {});

}  // namespace ofe
