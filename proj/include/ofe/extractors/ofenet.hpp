#pragma once

#include "ofe/extractors/arch_spec.hpp"
#include "ofe/extractors/extractor.hpp"
#include "ofe/gradkit/adam.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace ofe {

struct LayerParamCount {
  std::string name;
  Eigen::Index input_units = 0;
  /// New units produced by the layer (densenet: excludes the passed-through input).
  Eigen::Index output_units = 0;
  std::size_t params = 0;
};

struct ExtractorParamCount {
  std::vector<LayerParamCount> phi_o;
  std::vector<LayerParamCount> phi_oa;
  std::size_t pred_head = 0;
  std::size_t phi_o_total = 0;
  std::size_t phi_oa_total = 0;
  std::size_t total = 0;
};

struct OfeOptions {
  AdamOptions adam{};
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;
};

/// One of phi_o / phi_oa: a stack of layers in the chosen connectivity.
///
///   densenet: y = [x, act(BN(W x + b))]
///   mlp:      y = act(BN(W x + b))
///   resnet:   y = act(BN(W2 act(BN(W1 x + b1)) + b2) + S x)
///
/// S is the identity, or a bias-free projection on the first unit when the
/// input width differs from the block output width.
class FeatureBlock {
 public:
  FeatureBlock(std::string name, const ArchSpec& spec, Eigen::Index input_dim, Rng& rng,
               const OfeOptions& options);

  Var forward(Tape& tape, Var x, const EncodeOptions& options);

  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const { return output_dim_; }
  std::vector<LayerParamCount> param_counts() const;
  std::vector<Parameter*> parameters();
  void collect_state(std::vector<NamedArray>& out);
  void restore_state(const std::vector<NamedArray>& arrays);

 private:
  struct Unit {
    DenseLayer first;
    std::optional<BatchNorm> first_bn;
    // resnet only
    std::optional<DenseLayer> second;
    std::optional<BatchNorm> second_bn;
    std::optional<DenseLayer> projection;
  };

  Var normalized(Tape& tape, DenseLayer& layer, std::optional<BatchNorm>& bn, Var x,
                 const EncodeOptions& options);

  std::string name_;
  Connectivity connectivity_;
  Activation activation_;
  Eigen::Index input_dim_;
  Eigen::Index output_dim_;
  std::vector<Unit> units_;
};

/// Online feature extractor: phi_o, phi_oa and the linear prediction head
/// f_pred trained on ||f_pred(z_oa) - o'[mask]||^2.
class OfeNet final : public Extractor {
 public:
  OfeNet(ArchSpec spec, std::uint64_t seed, OfeOptions options = {});
  OfeNet(const OfeNet&) = delete;
  OfeNet& operator=(const OfeNet&) = delete;

  std::string kind() const override { return "ofe"; }
  Eigen::Index obs_dim() const override { return spec_.obs_dim; }
  Eigen::Index action_dim() const override { return spec_.action_dim; }
  Eigen::Index z_o_dim() const override { return phi_o_.output_dim(); }
  Eigen::Index z_oa_dim() const override { return phi_oa_.output_dim(); }

  Var encode_obs(Tape& tape, Var obs, const EncodeOptions& options) override;
  Var encode_obs_action(Tape& tape, Var z_o, Var action, const EncodeOptions& options) override;

  std::vector<Parameter*> representation_parameters() override;
  std::vector<Parameter*> parameters() override;

  bool has_auxiliary_task() const override { return true; }
  double train_step(const Batch& batch) override;
  double auxiliary_loss(const Batch& batch, BnMode mode) override;
  std::uint64_t train_steps() const override { return optimizer_.step_count(); }

  std::vector<NamedArray> state() override;
  void load_state(const std::vector<NamedArray>& arrays) override;

  /// f_pred(z_oa).
  Var predict(Tape& tape, Var z_oa, bool track);
  /// Records the auxiliary loss for `batch` on `tape`.
  Var aux_loss(Tape& tape, const Batch& batch, const EncodeOptions& options);

  ExtractorParamCount param_count() const;
  const ArchSpec& spec() const { return spec_; }
  DenseLayer& pred_head() { return pred_head_; }
  Adam& optimizer() { return optimizer_; }

 private:
  ArchSpec spec_;
  std::vector<Eigen::Index> target_indices_;
  Rng rng_;
  FeatureBlock phi_o_;
  FeatureBlock phi_oa_;
  DenseLayer pred_head_;
  Adam optimizer_;
};

/// Builds an OFENet after validating the spec; deterministic in `seed`.
std::unique_ptr<OfeNet> build_feature_extractor(const ArchSpec& spec, std::uint64_t seed,
                                                OfeOptions options = {});

/// Columns of `m` selected by `indices`.
Matrix select_columns(const Matrix& m, const std::vector<Eigen::Index>& indices);

}  // namespace ofe
