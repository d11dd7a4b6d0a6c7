#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cleer/tensor.hpp"

namespace cleer {

using Rng = std::mt19937_64;

/// Two crop intervals [a1, b1] and [a2, b2], 1-based and inclusive, with
/// 0 < a1 <= a2 <= b1 <= b2 <= T. The overlap is [a2, b1].
struct CropPair {
  std::size_t a1 = 1, b1 = 1, a2 = 1, b2 = 1;

  std::size_t overlap_length() const { return b1 - a2 + 1; }
  bool valid(std::size_t t) const { return 0 < a1 && a1 <= a2 && a2 <= b1 && b1 <= b2 && b2 <= t; }
};

/// Draws a2 ~ U{1..T}, b1 ~ U{a2..T}, a1 ~ U{1..a2}, b2 ~ U{b1..T}.
CropPair sample_crop_pair(std::size_t t, Rng& rng);

/// A cropped [B, L, C] view plus where the overlap starts inside it.
struct CroppedView {
  Tensor view;                   // [B, b - a + 1, C]
  std::size_t overlap_offset = 0;  // 0-based index of timestamp `overlap_begin` in the view
};

/// Slices timestamps [a, b] (1-based inclusive) out of x: [B, T, C] and
/// locates the 1-based timestamp `overlap_begin` inside the slice.
CroppedView apply_crop(const Tensor& x, std::size_t a, std::size_t b, std::size_t overlap_begin);

/// The two views of a CropPair, ready for index-aligned overlap extraction.
std::pair<CroppedView, CroppedView> crop_views(const Tensor& x, const CropPair& crop);

/// 1 = keep, 0 = masked.
struct MaskVector {
  std::vector<std::uint8_t> bits;

  static MaskVector ones(std::size_t length) { return {std::vector<std::uint8_t>(length, 1)}; }
  std::size_t size() const { return bits.size(); }
  double masked_fraction() const;
};

/// Each position is masked independently with probability p.
MaskVector sample_mask(std::size_t length, double p, Rng& rng);

/// One independent mask per batch item.
std::vector<MaskVector> sample_masks(std::size_t batch, std::size_t length, double p, Rng& rng);

/// Zeroes the latent vectors of masked timestamps. z: [B, L, D]; `masks`
/// holds one mask per item, or a single mask shared by the whole batch.
Tensor apply_mask(const Tensor& z, std::span<const MaskVector> masks);

}  // namespace cleer
