#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cleer/tensor.hpp"

namespace cleer {

struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zeroed moments shaped like `params`.
  static AdamState for_params(std::span<const Tensor> params, double lr = 1e-3);
};

/// One bias-corrected Adam update in place, then zeroes the gradients.
/// Throws ContractError if a parameter has no gradient buffer or the moment
/// arrays do not match the parameter shapes.
void adam_step(std::span<Tensor> params, AdamState& state);

/// Owns a parameter list and its AdamState.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr = 1e-3);

  void step() { adam_step(params_, state_); }
  const AdamState& state() const { return state_; }
  std::span<const Tensor> params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace cleer
