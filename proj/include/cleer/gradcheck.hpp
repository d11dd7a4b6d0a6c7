#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cleer/tensor.hpp"

namespace cleer {

struct GradCheckOptions {
  double eps = 1e-5;
  double tol_rel = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, abs_floor);
  // the floor keeps round-off on near-zero gradients from dominating.
  double abs_floor = 1e-4;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t n_checked = 0;
  bool passed = false;

  std::string summary() const;
};

/// Compares the reverse-mode gradient of `loss_fn` against central finite
/// differences for every element of every tensor in `inputs`. `loss_fn` must
/// read the inputs (by shared storage) and return a single-element tensor.
/// Inputs are restored afterwards; their gradients hold the analytic result.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});

}  // namespace cleer
