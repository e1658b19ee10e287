#include "ofe/gradkit/ops.hpp"

#include "ofe/errors.hpp"

#include <cmath>
#include <string>

namespace ofe {
namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw UsageError(std::string(op) + ": operands recorded on different tapes");
  }
  return *a.tape();
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  }
}

template <typename Expr>
void accumulate(Tape& t, std::size_t id, const Expr& expr) {
  if (t.requires_grad(id)) t.grad_slot(id) += expr;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) {
  // log(1 + e^x) without overflow.
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double activation_scalar(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::leaky_relu: return x > 0 ? x : kLeakySlope * x;
    case Activation::swish: return x * sigmoid(x);
    case Activation::selu: return x > 0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
    case Activation::identity: return x;
  }
  return x;
}

double activation_derivative(Activation a, double x, double y) {
  switch (a) {
    case Activation::relu: return x > 0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::leaky_relu: return x > 0 ? 1.0 : kLeakySlope;
    case Activation::swish: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::selu: return x > 0 ? kSeluLambda : y + kSeluLambda * kSeluAlpha;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::swish: return "swish";
    case Activation::selu: return "selu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "leaky_relu" || name == "leakyrelu") return Activation::leaky_relu;
  if (name == "swish") return Activation::swish;
  if (name == "selu") return Activation::selu;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Matrix apply_activation(Activation a, const Matrix& x) {
  if (a == Activation::identity) return x;
  return x.unaryExpr([a](double v) { return activation_scalar(a, v); });
}

Var linear(Var x, Var weight, Var bias) {
  Tape& t = same_tape(x, weight, "linear");
  if (x.cols() != weight.cols()) {
    throw ConfigError("linear: input width " + std::to_string(x.cols()) +
                      " does not match weight columns " + std::to_string(weight.cols()));
  }
  if (bias.rows() != 1 || bias.cols() != weight.rows()) {
    throw ConfigError("linear: bias must be 1 x " + std::to_string(weight.rows()));
  }
  Matrix y(x.rows(), weight.rows());
  y.noalias() = x.value() * weight.value().transpose();
  y.rowwise() += bias.value().row(0);
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  const bool rg = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
  return t.record(std::move(y), rg, [xi, wi, bi](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(xi)) tp.grad_slot(xi).noalias() += g * tp.value(wi);
    if (tp.requires_grad(wi)) tp.grad_slot(wi).noalias() += g.transpose() * tp.value(xi);
    if (tp.requires_grad(bi)) tp.grad_slot(bi) += g.colwise().sum();
  });
}

Var linear(Var x, Var weight) {
  Tape& t = same_tape(x, weight, "linear");
  if (x.cols() != weight.cols()) {
    throw ConfigError("linear: input width " + std::to_string(x.cols()) +
                      " does not match weight columns " + std::to_string(weight.cols()));
  }
  Matrix y(x.rows(), weight.rows());
  y.noalias() = x.value() * weight.value().transpose();
  const std::size_t xi = x.id(), wi = weight.id();
  const bool rg = x.requires_grad() || weight.requires_grad();
  return t.record(std::move(y), rg, [xi, wi](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(xi)) tp.grad_slot(xi).noalias() += g * tp.value(wi);
    if (tp.requires_grad(wi)) tp.grad_slot(wi).noalias() += g.transpose() * tp.value(xi);
  });
}

Var activate(Var x, Activation a) {
  if (a == Activation::identity) return x;
  Tape& t = *x.tape();
  Matrix y = apply_activation(a, x.value());
  const std::size_t xi = x.id();
  return t.record(std::move(y), x.requires_grad(), [xi, a](Tape& tp, std::size_t self) {
    const Matrix& xv = tp.value(xi);
    const Matrix& yv = tp.value(self);
    const Matrix& g = tp.grad(self);
    Matrix& gx = tp.grad_slot(xi);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      gx.data()[i] += g.data()[i] * activation_derivative(a, xv.data()[i], yv.data()[i]);
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a, b, "add");
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(a.value() + b.value(), a.requires_grad() || b.requires_grad(),
                  [ai, bi](Tape& tp, std::size_t self) {
                    accumulate(tp, ai, tp.grad(self));
                    accumulate(tp, bi, tp.grad(self));
                  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(a.value() - b.value(), a.requires_grad() || b.requires_grad(),
                  [ai, bi](Tape& tp, std::size_t self) {
                    accumulate(tp, ai, tp.grad(self));
                    accumulate(tp, bi, -tp.grad(self));
                  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  require_same_shape(a, b, "mul");
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad(),
                  [ai, bi](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    accumulate(tp, ai, g.cwiseProduct(tp.value(bi)));
                    accumulate(tp, bi, g.cwiseProduct(tp.value(ai)));
                  });
}

Var scale(Var a, double s) {
  const std::size_t ai = a.id();
  return a.tape()->record(a.value() * s, a.requires_grad(), [ai, s](Tape& tp, std::size_t self) {
    accumulate(tp, ai, tp.grad(self) * s);
  });
}

Var add_scalar(Var a, double s) {
  const std::size_t ai = a.id();
  Matrix y = a.value().array() + s;
  return a.tape()->record(std::move(y), a.requires_grad(), [ai](Tape& tp, std::size_t self) {
    accumulate(tp, ai, tp.grad(self));
  });
}

Var mul_scalar(Var a, Var s) {
  Tape& t = same_tape(a, s, "mul_scalar");
  if (s.value().size() != 1) throw ConfigError("mul_scalar: scale must be 1x1");
  const std::size_t ai = a.id(), si = s.id();
  return t.record(a.value() * s.value()(0, 0), a.requires_grad() || s.requires_grad(),
                  [ai, si](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    accumulate(tp, ai, g * tp.value(si)(0, 0));
                    if (tp.requires_grad(si)) {
                      tp.grad_slot(si)(0, 0) += g.cwiseProduct(tp.value(ai)).sum();
                    }
                  });
}

Var scale_shift(Var x, const RowVector& scale_row, const RowVector& shift_row) {
  if (scale_row.size() != x.cols() || shift_row.size() != x.cols()) {
    throw ConfigError("scale_shift: row width does not match input");
  }
  Matrix y = x.value();
  y.array().rowwise() *= scale_row.array();
  y.rowwise() += shift_row;
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(y), x.requires_grad(),
                          [xi, scale_row](Tape& tp, std::size_t self) {
                            Matrix g = tp.grad(self);
                            g.array().rowwise() *= scale_row.array();
                            accumulate(tp, xi, g);
                          });
}

Var exp(Var a) {
  const std::size_t ai = a.id();
  Matrix y = a.value().array().exp();
  return a.tape()->record(std::move(y), a.requires_grad(), [ai](Tape& tp, std::size_t self) {
    accumulate(tp, ai, tp.grad(self).cwiseProduct(tp.value(self)));
  });
}

Var log(Var a) {
  const std::size_t ai = a.id();
  Matrix y = a.value().array().log();
  return a.tape()->record(std::move(y), a.requires_grad(), [ai](Tape& tp, std::size_t self) {
    accumulate(tp, ai, tp.grad(self).cwiseQuotient(tp.value(ai)));
  });
}

Var tanh(Var a) { return activate(a, Activation::tanh); }

Var square(Var a) {
  const std::size_t ai = a.id();
  Matrix y = a.value().array().square();
  return a.tape()->record(std::move(y), a.requires_grad(), [ai](Tape& tp, std::size_t self) {
    accumulate(tp, ai, 2.0 * tp.grad(self).cwiseProduct(tp.value(ai)));
  });
}

Var softplus(Var a) {
  const std::size_t ai = a.id();
  Matrix y = a.value().unaryExpr([](double v) { return softplus_scalar(v); });
  return a.tape()->record(std::move(y), a.requires_grad(), [ai](Tape& tp, std::size_t self) {
    Matrix d = tp.value(ai).unaryExpr([](double v) { return sigmoid(v); });
    accumulate(tp, ai, tp.grad(self).cwiseProduct(d));
  });
}

Var clamp(Var a, double lo, double hi) {
  const std::size_t ai = a.id();
  Matrix y = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape()->record(std::move(y), a.requires_grad(),
                          [ai, lo, hi](Tape& tp, std::size_t self) {
                            const Matrix& x = tp.value(ai);
                            Matrix mask = x.unaryExpr(
                                [lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
                            accumulate(tp, ai, tp.grad(self).cwiseProduct(mask));
                          });
}

Var minimum(Var a, Var b) {
  Tape& t = same_tape(a, b, "minimum");
  require_same_shape(a, b, "minimum");
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(a.value().cwiseMin(b.value()), a.requires_grad() || b.requires_grad(),
                  [ai, bi](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    const Matrix& av = tp.value(ai);
                    const Matrix& bv = tp.value(bi);
                    Matrix ga = Matrix::Zero(g.rows(), g.cols());
                    Matrix gb = Matrix::Zero(g.rows(), g.cols());
                    for (Eigen::Index i = 0; i < g.size(); ++i) {
                      if (av.data()[i] <= bv.data()[i]) {
                        ga.data()[i] = g.data()[i];
                      } else {
                        gb.data()[i] = g.data()[i];
                      }
                    }
                    accumulate(tp, ai, ga);
                    accumulate(tp, bi, gb);
                  });
}

Var concat(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat");
  if (a.rows() != b.rows()) {
    throw ConfigError("concat: batch mismatch " + std::to_string(a.rows()) + " vs " +
                      std::to_string(b.rows()));
  }
  const Eigen::Index p = a.cols(), q = b.cols();
  Matrix y(a.rows(), p + q);
  y.leftCols(p) = a.value();
  y.rightCols(q) = b.value();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(y), a.requires_grad() || b.requires_grad(),
                  [ai, bi, p, q](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    accumulate(tp, ai, g.leftCols(p));
                    accumulate(tp, bi, g.rightCols(q));
                  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ConfigError("slice_cols: range out of bounds");
  }
  const std::size_t ai = a.id();
  Matrix y = a.value().middleCols(start, count);
  return a.tape()->record(std::move(y), a.requires_grad(),
                          [ai, start, count](Tape& tp, std::size_t self) {
                            tp.grad_slot(ai).middleCols(start, count) += tp.grad(self);
                          });
}

Var row_sum(Var a) {
  const std::size_t ai = a.id();
  Matrix y = a.value().rowwise().sum();
  const Eigen::Index cols = a.cols();
  return a.tape()->record(std::move(y), a.requires_grad(), [ai, cols](Tape& tp, std::size_t self) {
    tp.grad_slot(ai) += tp.grad(self).replicate(1, cols);
  });
}

Var sum(Var a) {
  const std::size_t ai = a.id();
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return a.tape()->record(std::move(y), a.requires_grad(), [ai](Tape& tp, std::size_t self) {
    tp.grad_slot(ai).array() += tp.grad(self)(0, 0);
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw UsageError("mean: empty input");
  return scale(sum(a), 1.0 / n);
}

Var squared_error(Var pred, Var target) {
  require_same_shape(pred, target, "squared_error");
  if (pred.rows() == 0) throw UsageError("squared_error: empty batch");
  return scale(sum(square(sub(pred, target))), 1.0 / static_cast<double>(pred.rows()));
}

Var batch_norm_train(Var x, Var gamma, Var beta, double epsilon) {
  Tape& t = same_tape(x, gamma, "batch_norm");
  const Eigen::Index n = x.rows(), w = x.cols();
  if (n < 2) throw UsageError("batch_norm: train mode needs a batch of at least 2 rows");
  if (gamma.cols() != w || beta.cols() != w) throw ConfigError("batch_norm: width mismatch");
  const Matrix& xv = x.value();
  RowVector mu = xv.colwise().mean();
  Matrix centered = xv.rowwise() - mu;
  RowVector var = centered.array().square().colwise().sum() / static_cast<double>(n);
  RowVector inv_std = (var.array() + epsilon).rsqrt();
  Matrix xhat = centered.array().rowwise() * inv_std.array();
  Matrix y = xhat.array().rowwise() * gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
  const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  return t.record(std::move(y), rg,
                  [xi, gi, bi, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                      Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    const double count = static_cast<double>(g.rows());
                    if (tp.requires_grad(gi)) tp.grad_slot(gi) += g.cwiseProduct(xhat).colwise().sum();
                    if (tp.requires_grad(bi)) tp.grad_slot(bi) += g.colwise().sum();
                    if (tp.requires_grad(xi)) {
                      Matrix dxhat = g.array().rowwise() * tp.value(gi).row(0).array();
                      RowVector s1 = dxhat.colwise().sum();
                      RowVector s2 = dxhat.cwiseProduct(xhat).colwise().sum();
                      Matrix dx = (count * dxhat).rowwise() - s1;
                      dx -= (xhat.array().rowwise() * s2.array()).matrix();
                      dx.array().rowwise() *= (inv_std.array() / count);
                      tp.grad_slot(xi) += dx;
                    }
                  });
}

Var batch_norm_fixed(Var x, const RowVector& mean_row, const RowVector& var_row, Var gamma,
                     Var beta, double epsilon) {
  Tape& t = same_tape(x, gamma, "batch_norm");
  const Eigen::Index w = x.cols();
  if (gamma.cols() != w || beta.cols() != w || mean_row.size() != w || var_row.size() != w) {
    throw ConfigError("batch_norm: width mismatch");
  }
  RowVector inv_std = (var_row.array() + epsilon).rsqrt();
  Matrix xhat = (x.value().rowwise() - mean_row).array().rowwise() * inv_std.array();
  Matrix y = xhat.array().rowwise() * gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
  const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  return t.record(std::move(y), rg,
                  [xi, gi, bi, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                      Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    if (tp.requires_grad(gi)) tp.grad_slot(gi) += g.cwiseProduct(xhat).colwise().sum();
                    if (tp.requires_grad(bi)) tp.grad_slot(bi) += g.colwise().sum();
                    if (tp.requires_grad(xi)) {
                      Matrix dx = g.array().rowwise() *
                                  (tp.value(gi).row(0).array() * inv_std.array());
                      tp.grad_slot(xi) += dx;
                    }
                  });
}

}  // namespace ofe
