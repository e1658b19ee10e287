#include "ofe/gradkit/tape.hpp"

#include "ofe/errors.hpp"

namespace ofe {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Matrix value) { return record(std::move(value), true, nullptr); }

Var Tape::parameter(Parameter& p, bool track) {
  Var v = record(p.value, track, nullptr);
  if (track) nodes_[v.id()].param = &p;
  return v;
}

Var Tape::record(Matrix value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    // Unreached node: report zeros of the right shape.
    const_cast<Tape*>(this)->grad_slot(id);
  }
  return nodes_[id].grad;
}

Matrix& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw UsageError("backward: root belongs to another tape");
  const std::size_t r = root.id();
  if (nodes_[r].value.size() != 1) throw UsageError("backward: root must be a 1x1 scalar");
  if (!nodes_[r].requires_grad) return;
  grad_slot(r)(0, 0) += 1.0;
  for (std::size_t i = r + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (!n.grad.allFinite()) {
      throw NumericError("backward: non-finite gradient at tape node " + std::to_string(i));
    }
    if (n.backward) n.backward(*this, i);
    if (nodes_[i].param != nullptr) nodes_[i].param->accumulate_grad(nodes_[i].grad);
  }
}

}  // namespace ofe
