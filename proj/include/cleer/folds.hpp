#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cleer {

struct FoldSplit {
  int k = 5;
  std::vector<int> fold_assignments;  // one fold id in [0, k) per item

  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> val_indices(int fold) const;
};

/// Stratified k-fold assignment. Items of each class are shuffled with the
/// seed, then dealt round-robin across folds, so every fold's per-class
/// count is within one of N_class / k. With `contiguous` the shuffle is
/// skipped and each class is cut into k consecutive blocks instead, which
/// keeps temporally adjacent windows in the same fold.
FoldSplit stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed, bool contiguous = false);

}  // namespace cleer
