#pragma once

#include "ofe/gradkit/tape.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ofe {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  /// "<param>[i]" of the entry with the largest relative error.
  std::string worst_entry;
  bool passed = false;
};

/// Builds a scalar loss on the given tape. Parameters must be entered via
/// Tape::parameter so their gradients can be collected.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `loss` with respect to `params` against
/// central differences with step `h`. Relative error per entry is
/// |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport grad_check(const LossBuilder& loss, const std::vector<Parameter*>& params,
                           double rel_tol, double h = 1e-5, double abs_floor = 1e-7);

/// Scalar-function form: checks d f / d x at `point`.
GradCheckReport grad_check(const std::function<Var(Tape&, Var)>& f, const Matrix& point,
                           double rel_tol, double h = 1e-5, double abs_floor = 1e-7);

}  // namespace ofe
