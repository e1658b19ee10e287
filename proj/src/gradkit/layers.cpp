#include "ofe/gradkit/layers.hpp"

#include "ofe/errors.hpp"

#include <cmath>

namespace ofe {

DenseLayer::DenseLayer(std::string name, Eigen::Index in_features, Eigen::Index out_features,
                       Activation activation, Rng& rng, bool with_bias)
    : name_(std::move(name)), activation_(activation), with_bias_(with_bias) {
  if (in_features <= 0 || out_features <= 0) {
    throw ConfigError("layer " + name_ + ": widths must be positive");
  }
  const double bound = std::sqrt(1.0 / static_cast<double>(in_features));
  weight_ = Parameter(name_ + ".weight", uniform_matrix(out_features, in_features, bound, rng));
  if (with_bias_) {
    bias_ = Parameter(name_ + ".bias", uniform_matrix(1, out_features, bound, rng));
  }
}

Var DenseLayer::forward(Tape& tape, Var x, bool track) {
  if (x.cols() != in_features()) {
    throw ConfigError("layer " + name_ + ": expected input width " +
                      std::to_string(in_features()) + ", got " + std::to_string(x.cols()));
  }
  Var w = tape.parameter(weight_, track);
  Var y = with_bias_ ? linear(x, w, tape.parameter(bias_, track)) : linear(x, w);
  y = activate(y, activation_);
  if (!y.value().allFinite()) throw NumericError("layer " + name_ + ": non-finite output");
  return y;
}

std::vector<Parameter*> DenseLayer::parameters() {
  if (with_bias_) return {&weight_, &bias_};
  return {&weight_};
}

std::size_t DenseLayer::param_count() const {
  return static_cast<std::size_t>(weight_.value.size() + (with_bias_ ? bias_.value.size() : 0));
}

BatchNorm::BatchNorm(std::string name, Eigen::Index width, double momentum, double epsilon)
    : name_(std::move(name)), momentum_(momentum), epsilon_(epsilon) {
  if (width <= 0) throw ConfigError("batch norm " + name_ + ": width must be positive");
  if (!(momentum > 0.0 && momentum < 1.0)) {
    throw ConfigError("batch norm " + name_ + ": momentum must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("batch norm " + name_ + ": epsilon must be positive");
  gamma_ = Parameter(name_ + ".gamma", Matrix::Ones(1, width));
  beta_ = Parameter(name_ + ".beta", Matrix::Zero(1, width));
  moving_mean_ = RowVector::Zero(width);
  moving_var_ = RowVector::Ones(width);
}

Var BatchNorm::forward(Tape& tape, Var x, BnMode mode, bool track, bool update_stats) {
  if (x.cols() != width()) {
    throw ConfigError("batch norm " + name_ + ": expected width " + std::to_string(width()) +
                      ", got " + std::to_string(x.cols()));
  }
  Var g = tape.parameter(gamma_, track);
  Var b = tape.parameter(beta_, track);
  if (mode == BnMode::eval) return batch_norm_fixed(x, moving_mean_, moving_var_, g, b, epsilon_);
  if (x.rows() < 2) {
    throw UsageError("batch norm " + name_ + ": train mode needs a batch of at least 2 rows");
  }
  Var y = batch_norm_train(x, g, b, epsilon_);
  if (update_stats) {
    const Matrix& xv = x.value();
    const double n = static_cast<double>(xv.rows());
    RowVector mu = xv.colwise().mean();
    RowVector var = (xv.rowwise() - mu).array().square().colwise().sum() / (n - 1.0);
    moving_mean_ = momentum_ * moving_mean_ + (1.0 - momentum_) * mu;
    moving_var_ = momentum_ * moving_var_ + (1.0 - momentum_) * var;
  }
  return y;
}

std::vector<Parameter*> BatchNorm::parameters() { return {&gamma_, &beta_}; }

Mlp::Mlp(std::string name, Eigen::Index in_features, const std::vector<Eigen::Index>& hidden,
         Eigen::Index out_features, Activation hidden_activation, Activation output_activation,
         Rng& rng) {
  Eigen::Index in = in_features;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), in, hidden[i], hidden_activation, rng);
    in = hidden[i];
  }
  layers_.emplace_back(name + ".out", in, out_features, output_activation, rng);
}

Var Mlp::forward(Tape& tape, Var x, bool track) {
  for (auto& layer : layers_) x = layer.forward(tape, x, track);
  return x;
}

Matrix Mlp::predict(const Matrix& x) {
  Matrix h = x;
  for (auto& layer : layers_) {
    Matrix y = h * layer.weight().value.transpose();
    y.rowwise() += layer.bias().value.row(0);
    h = apply_activation(layer.activation(), y);
  }
  if (!h.allFinite()) throw NumericError("mlp " + layers_.front().name() + ": non-finite output");
  return h;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (auto* p : layer.parameters()) out.push_back(p);
  }
  return out;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.param_count();
  return n;
}

void Mlp::polyak_from(Mlp& source, double tau) {
  auto dst = parameters();
  auto src = source.parameters();
  if (dst.size() != src.size()) throw ConfigError("polyak: architecture mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i]->value = (1.0 - tau) * dst[i]->value + tau * src[i]->value;
  }
}

std::size_t mlp_param_count(Eigen::Index in_features, const std::vector<Eigen::Index>& hidden,
                            Eigen::Index out_features) {
  std::size_t n = 0;
  Eigen::Index in = in_features;
  for (auto h : hidden) {
    n += static_cast<std::size_t>(in * h + h);
    in = h;
  }
  n += static_cast<std::size_t>(in * out_features + out_features);
  return n;
}

}  // namespace ofe
