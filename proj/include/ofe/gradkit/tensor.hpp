#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ofe {

/// Dense row-major matrix of doubles. Rows index the batch, columns index features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

using Rng = std::mt19937_64;

/// A trainable array. `grad` stays empty until the first backward pass that
/// reaches this parameter; after that it always has the shape of `value`.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {}

  Eigen::Index size() const { return value.size(); }
  bool has_grad() const { return grad.size() == value.size() && grad.size() > 0; }
  void zero_grad() {
    if (grad.size() != 0) grad.setZero();
  }
  void accumulate_grad(const Matrix& g);
};

/// A named array as written to parameter snapshots.
struct NamedArray {
  std::string name;
  Matrix value;
};

bool all_finite(const Matrix& m);

/// Uniform(-bound, bound) fill, deterministic in `rng`.
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng);
Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

/// Total number of scalar entries across parameters.
std::size_t count_parameters(const std::vector<Parameter*>& params);

}  // namespace ofe
