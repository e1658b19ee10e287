#pragma once

#include "ofe/gradkit/tape.hpp"

#include <string_view>

namespace ofe {

enum class Activation { relu, tanh, leaky_relu, swish, selu, identity };

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

std::string_view to_string(Activation a);
/// Throws ConfigError for unknown names.
Activation parse_activation(std::string_view name);

/// Elementwise activation applied outside any tape.
Matrix apply_activation(Activation a, const Matrix& x);

// Every op takes Vars recorded on the same tape and returns a new Var on it.

/// x * weight^T + bias, with weight (out x in) and bias (1 x out).
Var linear(Var x, Var weight, Var bias);
/// Same without bias.
Var linear(Var x, Var weight);
Var activate(Var x, Activation a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// Multiplies every entry of `a` by the 1x1 Var `s`.
Var mul_scalar(Var a, Var s);
/// x .* scale_row + shift_row, row vectors broadcast over the batch.
Var scale_shift(Var x, const RowVector& scale_row, const RowVector& shift_row);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var square(Var a);
Var softplus(Var a);
/// Zero gradient where the input lies outside [lo, hi].
Var clamp(Var a, double lo, double hi);
/// Elementwise minimum; ties route the gradient to `a`.
Var minimum(Var a, Var b);

/// Columns of `a` followed by columns of `b`. Either side may have zero columns.
Var concat(Var a, Var b);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);

/// Per-row sum, result batch x 1.
Var row_sum(Var a);
/// Sum of all entries, 1x1.
Var sum(Var a);
/// Mean of all entries, 1x1.
Var mean(Var a);
/// Batch mean of the squared Euclidean row error: (1/batch) * sum_ij (pred - target)^2.
Var squared_error(Var pred, Var target);

/// Batch-statistics normalization of each column, then gamma/beta affine.
/// Uses the biased (1/N) variance. Needs at least two rows.
Var batch_norm_train(Var x, Var gamma, Var beta, double epsilon);
/// Normalization with fixed statistics (mean/var are 1 x width rows).
Var batch_norm_fixed(Var x, const RowVector& mean, const RowVector& var, Var gamma, Var beta,
                     double epsilon);

}  // namespace ofe
