#pragma once

#include "ofe/gradkit/tensor.hpp"

#include <cstdint>
#include <vector>

namespace ofe {

struct AdamOptions {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over a fixed parameter list. A parameter whose
/// grad was never allocated is treated as having a zero gradient.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamOptions options = {});

  /// Throws NumericError naming the first parameter with a non-finite gradient;
  /// no parameter is modified in that case.
  void step();
  void zero_grad();

  std::uint64_t step_count() const { return step_count_; }
  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  const std::vector<Parameter*>& parameters() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t step_count_ = 0;
  AdamOptions options_;
};

}  // namespace ofe
