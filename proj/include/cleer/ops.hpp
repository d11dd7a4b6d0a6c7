#pragma once

#include <cstdint>
#include <span>

#include "cleer/tensor.hpp"

// Differentiable kernels. All take and return Tensors by value (shared
// storage) and record a backward closure when any input requires grad.
namespace cleer::ops {

/// y = x·W + b over the last axis. x: [..., D_in], weight: [D_in, D_out],
/// bias: [D_out] or undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// "Same"-padded dilated 1-D cross-correlation.
///   x: [B, C_in, L], kernel: [C_out, C_in, K] with K odd, bias: [C_out] or undefined.
///   y[b,o,t] = bias[o] + sum_{c,k} kernel[o,c,k] * x[b, c, t + (k - K/2) * dilation]
/// with zeros outside [0, L).
Tensor conv1d_dilated(const Tensor& x, const Tensor& kernel, int dilation, const Tensor& bias = {});

/// Kernel-2 / stride-2 max pooling over the last axis of [B, C, L]; an odd
/// tail element passes through. Ties resolve to the lower index.
Tensor maxpool1d(const Tensor& x);

/// Max over the last axis: [B, C, L] -> [B, C]. Ties resolve to the lower index.
Tensor global_max_pool(const Tensor& x);

Tensor relu(const Tensor& x);

/// Row-wise over the last axis.
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);

/// Mean negative log-likelihood of `labels` under softmax(logits).
/// logits: [B, K]; evaluated through log-sum-exp.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

Tensor add(const Tensor& a, const Tensor& b);
/// Elementwise product of equal shapes.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Swaps the last two axes of a rank-3 tensor: [B, A, C] -> [B, C, A].
Tensor transpose12(const Tensor& x);

/// Half-open slice [begin, end) of axis 1 of a rank-3 tensor.
Tensor slice_axis1(const Tensor& x, std::size_t begin, std::size_t end);

/// Zeroes z[b, t, :] wherever keep[b * L + t] == 0. z: [B, L, D].
Tensor time_mask(const Tensor& z, std::span<const std::uint8_t> keep);

}  // namespace cleer::ops
