#pragma once

#include <span>
#include <vector>

#include "cleer/tensor.hpp"

namespace cleer {

// Contrastive losses over aligned overlap representations z, z_prime of
// shape [B, K, D] (batch, overlap timestamps, representation). Similarities
// are raw dot products: no temperature and no normalization.
//
// For an anchor z[i,t] the positive is z_prime[i,t]. The temporal loss
// contrasts it with z_prime[i,t'] (all t') and z[i,t'] (t' != t); the
// instance loss contrasts it with z_prime[j,t] (all j) and z[j,t] (j != i).
// Each loss is the mean over all (i, t) of -log softmax-weight of the positive.

struct ContrastOptions {
  // Average the loss with the one obtained by swapping the two views.
  bool symmetrize = false;
};

Tensor tcl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options = {});
Tensor icl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options = {});

/// tcl_loss + icl_loss (both means over the same (i, t) set).
Tensor dcl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options = {});

struct LevelLoss {
  int level = 0;
  std::size_t length = 0;
  double tcl = 0.0;
  double icl = 0.0;
  double dcl = 0.0;
};

struct LossBreakdown {
  std::vector<LevelLoss> per_level;
  double hcl = 0.0;
  double class_loss = 0.0;
  double total = 0.0;
};

struct LossResult {
  Tensor loss;
  LossBreakdown breakdown;
};

/// Multi-resolution loss: dcl at full resolution, then after each
/// kernel-2/stride-2 max-pool along time, down to length 1 inclusive;
/// averaged over the ceil(log2 K) + 1 levels.
LossResult hcl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options = {});

/// hcl + lambda_class * cross_entropy(class_logits, labels).
LossResult joint_loss(const LossResult& hcl, const Tensor& class_logits, std::span<const int> labels,
                      double lambda_class = 1.0);

/// Number of hierarchy levels for an overlap of length k.
std::size_t hierarchy_levels(std::size_t k);

}  // namespace cleer
