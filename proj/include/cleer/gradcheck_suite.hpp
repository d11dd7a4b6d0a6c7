#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cleer/gradcheck.hpp"

namespace cleer {

struct KernelCheck {
  std::string name;
  GradCheckReport report;
};

/// Finite-difference checks of every differentiable kernel, the contrastive
/// losses, and the full joint-loss closure on a toy model (B=2, T=8, C=3,
/// hidden 8, repr 12, 2 blocks). Inputs are drawn from `seed`.
std::vector<KernelCheck> run_gradcheck_suite(std::uint64_t seed = 0, const GradCheckOptions& options = {});

}  // namespace cleer
