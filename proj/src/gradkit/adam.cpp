#include "ofe/gradkit/adam.hpp"

#include "ofe/errors.hpp"

#include <cmath>

namespace ofe {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  if (!(options_.learning_rate >= 0.0)) throw ConfigError("adam: learning rate must be >= 0");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  for (const auto* p : params_) {
    if (p->has_grad() && !p->grad.allFinite()) {
      throw NumericError("adam: non-finite gradient for parameter '" + p->name + "'");
    }
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  const double lr = options_.learning_rate;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.has_grad()) {
      m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * p.grad;
      v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * p.grad.cwiseAbs2();
    } else {
      m_[i] *= options_.beta1;
      v_[i] *= options_.beta2;
    }
    if (lr == 0.0) continue;
    const double eps = options_.epsilon;
    p.value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

}  // namespace ofe
