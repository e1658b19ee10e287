#pragma once

#include "ofe/gradkit/ops.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ofe {

enum class Connectivity { densenet, mlp, resnet };

std::string_view to_string(Connectivity c);
Connectivity parse_connectivity(std::string_view name);

/// Declarative description of a feature extractor. phi_o and phi_oa share the
/// layer count, activation and increment.
struct ArchSpec {
  Connectivity connectivity = Connectivity::densenet;
  int layers_per_block = 2;
  /// Dimensionality each block adds to its input.
  int total_increment = 32;
  Activation activation = Activation::swish;
  bool use_batch_norm = true;
  Eigen::Index obs_dim = 0;
  Eigen::Index action_dim = 0;
  /// Observation indices the prediction head targets; empty means all.
  std::vector<Eigen::Index> prediction_mask;

  /// Throws ConfigError on non-positive dims, zero layers, or a densenet
  /// increment not divisible by the layer count.
  void validate() const;

  Eigen::Index z_o_dim() const { return obs_dim + total_increment; }
  Eigen::Index z_oa_dim() const { return z_o_dim() + action_dim + total_increment; }
  /// New units per densenet layer; block output width for mlp/resnet hidden layers.
  Eigen::Index densenet_layer_width() const { return total_increment / layers_per_block; }
  /// prediction_mask resolved against obs_dim.
  std::vector<Eigen::Index> predicted_indices() const;

  /// Short identifier such as "densenet-l6-swish-bn".
  std::string label() const;
};

bool operator==(const ArchSpec& a, const ArchSpec& b);

/// Flat "key=value" lines: connectivity, layers, increment, activation,
/// batch_norm, obs_dim, action_dim, prediction_mask (comma list, may be empty).
std::string to_config_text(const ArchSpec& spec);
ArchSpec parse_arch_spec(std::string_view text);

}  // namespace ofe
