#pragma once

#include "ofe/gradkit/tensor.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace ofe {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  /// Gradient after Tape::backward. Zero matrix for nodes the root does not reach.
  const Matrix& grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder. Every forward pass builds a fresh tape; backward walks
/// it once in reverse order and deposits gradients into the Parameters it saw.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that receives a gradient readable through Var::grad.
  Var variable(Matrix value);
  /// Leaf bound to a Parameter. With `track == false` the value enters as a
  /// constant: gradients still flow to downstream inputs but never into `p`.
  Var parameter(Parameter& p, bool track = true);

  /// Appends an op node. `requires_grad` should be the OR over its inputs.
  Var record(Matrix value, bool requires_grad, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1 and propagates. Root must be 1x1.
  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Mutable gradient slot for backward functions; allocated zero on first use.
  Matrix& grad_slot(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  Matrix empty_;
};

}  // namespace ofe
