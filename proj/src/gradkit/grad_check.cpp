#include "ofe/gradkit/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace ofe {

GradCheckReport grad_check(const LossBuilder& loss, const std::vector<Parameter*>& params,
                           double rel_tol, double h, double abs_floor) {
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    Var out = loss(tape);
    tape.backward(out);
  }
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) {
    analytic.push_back(p->has_grad() ? p->grad : Matrix::Zero(p->value.rows(), p->value.cols()));
    p->zero_grad();
  }

  auto evaluate = [&loss]() {
    Tape tape;
    return loss(tape).value()(0, 0);
  };

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double& x = p.value.data()[i];
      const double saved = x;
      x = saved + h;
      const double up = evaluate();
      x = saved - h;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k].data()[i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), abs_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (report.checked == 0 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_entry = p.name + "[" + std::to_string(i) + "]";
      }
      ++report.checked;
    }
  }
  report.passed = report.max_rel_error <= rel_tol;
  return report;
}

GradCheckReport grad_check(const std::function<Var(Tape&, Var)>& f, const Matrix& point,
                           double rel_tol, double h, double abs_floor) {
  Parameter x("x", point);
  return grad_check([&](Tape& tape) { return f(tape, tape.parameter(x)); },
                    std::vector<Parameter*>{&x}, rel_tol, h, abs_floor);
}

}  // namespace ofe
