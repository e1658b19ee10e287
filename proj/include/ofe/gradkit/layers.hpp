#pragma once

#include "ofe/gradkit/ops.hpp"

#include <string>
#include <vector>

namespace ofe {

/// Fully connected layer: activation(x * W^T + b). Weights and bias are
/// initialized U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::string name, Eigen::Index in_features, Eigen::Index out_features,
             Activation activation, Rng& rng, bool with_bias = true);

  /// Throws ConfigError on width mismatch and NumericError (naming the layer)
  /// on a non-finite result.
  Var forward(Tape& tape, Var x, bool track = true);

  Eigen::Index in_features() const { return weight_.value.cols(); }
  Eigen::Index out_features() const { return weight_.value.rows(); }
  Activation activation() const { return activation_; }
  const std::string& name() const { return name_; }
  bool has_bias() const { return with_bias_; }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

  std::vector<Parameter*> parameters();
  std::size_t param_count() const;

 private:
  std::string name_;
  Parameter weight_;
  Parameter bias_;
  Activation activation_ = Activation::identity;
  bool with_bias_ = true;
};

enum class BnMode { train, eval };

/// Batch normalization over the batch axis with moving statistics for eval.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::string name, Eigen::Index width, double momentum = 0.99, double epsilon = 1e-5);

  /// Train mode: batch statistics, and when `update_stats` is set the moving
  /// statistics take one exponential-average step (unbiased batch variance).
  /// Eval mode: moving statistics. Throws UsageError on a 1-row train batch.
  Var forward(Tape& tape, Var x, BnMode mode, bool track = true, bool update_stats = true);

  Eigen::Index width() const { return gamma_.value.cols(); }
  /// gamma, beta, moving_mean, moving_var.
  std::size_t param_count() const { return 4 * static_cast<std::size_t>(width()); }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  RowVector& moving_mean() { return moving_mean_; }
  RowVector& moving_var() { return moving_var_; }
  const RowVector& moving_mean() const { return moving_mean_; }
  const RowVector& moving_var() const { return moving_var_; }
  double momentum() const { return momentum_; }
  double epsilon() const { return epsilon_; }
  const std::string& name() const { return name_; }

  std::vector<Parameter*> parameters();

 private:
  std::string name_;
  Parameter gamma_;
  Parameter beta_;
  RowVector moving_mean_;
  RowVector moving_var_;
  double momentum_ = 0.99;
  double epsilon_ = 1e-5;
};

/// Stack of dense layers; hidden layers share one activation, the output layer
/// has its own.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, Eigen::Index in_features, const std::vector<Eigen::Index>& hidden,
      Eigen::Index out_features, Activation hidden_activation, Activation output_activation,
      Rng& rng);

  Var forward(Tape& tape, Var x, bool track = true);
  /// Tape-free evaluation.
  Matrix predict(const Matrix& x);

  std::vector<Parameter*> parameters();
  std::size_t param_count() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Eigen::Index in_features() const { return layers_.front().in_features(); }
  Eigen::Index out_features() const { return layers_.back().out_features(); }

  /// target <- (1 - tau) * target + tau * source, parameter by parameter.
  void polyak_from(Mlp& source, double tau);

 private:
  std::vector<DenseLayer> layers_;
};

/// Parameter count of an MLP with the given widths (weights + biases).
std::size_t mlp_param_count(Eigen::Index in_features, const std::vector<Eigen::Index>& hidden,
                            Eigen::Index out_features);

}  // namespace ofe
