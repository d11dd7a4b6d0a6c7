#include "cleer/augment.hpp"

#include "cleer/error.hpp"
#include "cleer/ops.hpp"

namespace cleer {

namespace {
std::size_t uniform_index(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}
}  // namespace

CropPair sample_crop_pair(std::size_t t, Rng& rng) {
  if (t < 1) throw ConfigError("crop sampling needs T >= 1");
  CropPair c;
  c.a2 = uniform_index(1, t, rng);
  c.b1 = uniform_index(c.a2, t, rng);
  c.a1 = uniform_index(1, c.a2, rng);
  c.b2 = uniform_index(c.b1, t, rng);
  return c;
}

CroppedView apply_crop(const Tensor& x, std::size_t a, std::size_t b, std::size_t overlap_begin) {
  if (x.rank() != 3) throw DimensionError("apply_crop expects [B, T, C], got " + shape_str(x.shape()));
  const std::size_t t = x.dim(1);
  if (a < 1 || a > b || b > t) {
    throw IndexError("crop [" + std::to_string(a) + ", " + std::to_string(b) + "] outside [1, " + std::to_string(t) + "]");
  }
  if (overlap_begin < a || overlap_begin > b) {
    throw IndexError("overlap start " + std::to_string(overlap_begin) + " outside crop [" + std::to_string(a) + ", " +
                     std::to_string(b) + "]");
  }
  return {ops::slice_axis1(x, a - 1, b), overlap_begin - a};
}

std::pair<CroppedView, CroppedView> crop_views(const Tensor& x, const CropPair& crop) {
  if (x.rank() != 3 || !crop.valid(x.dim(1))) throw IndexError("crop pair does not fit the input");
  return {apply_crop(x, crop.a1, crop.b1, crop.a2), apply_crop(x, crop.a2, crop.b2, crop.a2)};
}

double MaskVector::masked_fraction() const {
  if (bits.empty()) return 0.0;
  std::size_t masked = 0;
  for (auto b : bits) masked += b == 0;
  return static_cast<double>(masked) / static_cast<double>(bits.size());
}

MaskVector sample_mask(std::size_t length, double p, Rng& rng) {
  if (length < 1) throw ConfigError("mask length must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("mask probability must lie in [0, 1]");
  std::bernoulli_distribution masked(p);
  MaskVector m;
  m.bits.resize(length);
  for (auto& b : m.bits) b = masked(rng) ? 0 : 1;
  return m;
}

std::vector<MaskVector> sample_masks(std::size_t batch, std::size_t length, double p, Rng& rng) {
  std::vector<MaskVector> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(sample_mask(length, p, rng));
  return out;
}

Tensor apply_mask(const Tensor& z, std::span<const MaskVector> masks) {
  if (z.rank() != 3) throw DimensionError("apply_mask expects [B, L, D], got " + shape_str(z.shape()));
  const std::size_t b = z.dim(0), l = z.dim(1);
  if (masks.size() != b && masks.size() != 1) {
    throw DimensionError(std::to_string(masks.size()) + " masks for a batch of " + std::to_string(b));
  }
  std::vector<std::uint8_t> keep;
  keep.reserve(b * l);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& m = masks.size() == 1 ? masks[0] : masks[i];
    if (m.size() != l) {
      throw DimensionError("mask of length " + std::to_string(m.size()) + " for latent length " + std::to_string(l));
    }
    keep.insert(keep.end(), m.bits.begin(), m.bits.end());
  }
  return ops::time_mask(z, keep);
}

}  // namespace cleer
