#include "cleer/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cleer/error.hpp"

namespace cleer {

std::string GradCheckReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s max_rel_error=%.3e over %zu elements (input %zu, index %zu: analytic %.6e numeric %.6e)",
                passed ? "PASS" : "FAIL", max_rel_error, n_checked, worst_input, worst_index, worst_analytic,
                worst_numeric);
  return buf;
}

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.clear_grad();
  }
  Tensor loss = loss_fn();
  if (loss.numel() != 1) throw ContractError("grad_check: closure returned non-scalar " + shape_str(loss.shape()));
  if (!loss.requires_grad()) throw ContractError("grad_check: closure output does not depend on the inputs");
  loss.backward();

  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.numel(), 0.0);
    }
  }

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + options.eps;
      const double up = loss_fn().item();
      values[j] = saved - options.eps;
      const double down = loss_fn().item();
      values[j] = saved;

      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      const double err = std::abs(a - numeric) / denom;
      ++report.n_checked;
      if (err > report.max_rel_error || std::isnan(err)) {
        report.max_rel_error = std::isnan(err) ? INFINITY : err;
        report.worst_input = i;
        report.worst_index = j;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error < options.tol_rel;
  return report;
}

}  // namespace cleer
