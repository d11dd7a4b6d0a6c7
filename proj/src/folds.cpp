#include "cleer/folds.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "cleer/error.hpp"

namespace cleer {

std::vector<std::size_t> FoldSplit::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_assignments.size(); ++i)
    if (fold_assignments[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldSplit::val_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_assignments.size(); ++i)
    if (fold_assignments[i] == fold) out.push_back(i);
  return out;
}

FoldSplit stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed, bool contiguous) {
  if (k < 2) throw ConfigError("stratified_kfold needs k >= 2, got " + std::to_string(k));
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw StratificationError("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                " members, fewer than k = " + std::to_string(k));
    }
  }

  FoldSplit split;
  split.k = k;
  split.fold_assignments.assign(labels.size(), -1);
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;  // carried across classes so fold totals stay balanced too
  for (auto& [label, members] : by_class) {
    const std::size_t m = members.size();
    if (contiguous) {
      // Block j gets floor/ceil(m / k) consecutive items; larger blocks rotate with offset.
      std::vector<std::size_t> sizes(k, m / k);
      for (std::size_t r = 0; r < m % k; ++r) sizes[(offset + r) % k] += 1;
      std::size_t pos = 0;
      for (int f = 0; f < k; ++f)
        for (std::size_t j = 0; j < sizes[f]; ++j) split.fold_assignments[members[pos++]] = f;
    } else {
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t j = 0; j < m; ++j) split.fold_assignments[members[j]] = static_cast<int>((offset + j) % k);
    }
    offset += m % k;
  }
  return split;
}

}  // namespace cleer
