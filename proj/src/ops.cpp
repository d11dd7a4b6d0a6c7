#include "cleer/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "cleer/error.hpp"

namespace cleer::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

std::vector<double>* grad_of(const Tensor& t) {
  return t.requires_grad() ? &t.node()->ensure_grad() : nullptr;
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear weight");
  const std::size_t din = weight.dim(0), dout = weight.dim(1);
  if (x.rank() < 1 || x.shape().back() != din) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{dout}) {
    throw DimensionError("linear: bias " + shape_str(bias.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
  }
  const std::size_t rows = x.numel() / din;
  Shape out_shape = x.shape();
  out_shape.back() = dout;

  std::vector<double> out(rows * dout);
  CMapMat X(x.data().data(), rows, din);
  CMapMat W(weight.data().data(), din, dout);
  MapMat Y(out.data(), rows, dout);
  Y.noalias() = X * W;
  if (bias.defined()) {
    Eigen::Map<const Eigen::RowVectorXd> b(bias.data().data(), dout);
    Y.rowwise() += b;
  }

  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor::make_result(std::move(out_shape), std::move(out), std::move(inputs),
                             [x, weight, bias, rows, din, dout](detail::Node& o) {
                               CMapMat dY(o.grad.data(), rows, dout);
                               if (auto* gx = grad_of(x)) {
                                 MapMat dX(gx->data(), rows, din);
                                 dX.noalias() += dY * CMapMat(weight.data().data(), din, dout).transpose();
                               }
                               if (auto* gw = grad_of(weight)) {
                                 MapMat dW(gw->data(), din, dout);
                                 dW.noalias() += CMapMat(x.data().data(), rows, din).transpose() * dY;
                               }
                               if (bias.defined()) {
                                 if (auto* gb = grad_of(bias)) {
                                   Eigen::Map<Eigen::RowVectorXd> db(gb->data(), dout);
                                   db += dY.colwise().sum();
                                 }
                               }
                             });
}

Tensor conv1d_dilated(const Tensor& x, const Tensor& kernel, int dilation, const Tensor& bias) {
  require_rank(x, 3, "conv1d_dilated input");
  require_rank(kernel, 3, "conv1d_dilated kernel");
  if (dilation < 1) throw ConfigError("conv1d_dilated: dilation must be >= 1, got " + std::to_string(dilation));
  const std::size_t B = x.dim(0), cin = x.dim(1), L = x.dim(2);
  const std::size_t cout = kernel.dim(0), K = kernel.dim(2);
  if (K % 2 == 0) throw ConfigError("conv1d_dilated: kernel size must be odd, got " + std::to_string(K));
  if (kernel.dim(1) != cin) {
    throw DimensionError("conv1d_dilated: input " + shape_str(x.shape()) + " does not match kernel " +
                         shape_str(kernel.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{cout}) {
    throw DimensionError("conv1d_dilated: bias " + shape_str(bias.shape()) + " does not match kernel " +
                         shape_str(kernel.shape()));
  }

  const std::size_t rows = cin * K, cols = B * L;
  const long half = static_cast<long>(K / 2);
  const long d = dilation;

  // im2col: column b*L + t holds the receptive field of output position (b, t).
  auto xcol = std::make_shared<std::vector<double>>(rows * cols, 0.0);
  const double* xp = x.data().data();
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      const long off = (static_cast<long>(k) - half) * d;
      const long t0 = std::max(0L, -off), t1 = std::min(static_cast<long>(L), static_cast<long>(L) - off);
      double* row = xcol->data() + (c * K + k) * cols;
      for (std::size_t b = 0; b < B; ++b) {
        const double* src = xp + (b * cin + c) * L;
        for (long t = t0; t < t1; ++t) row[b * L + t] = src[t + off];
      }
    }
  }

  RowMat ymat = CMapMat(kernel.data().data(), cout, rows) * CMapMat(xcol->data(), rows, cols);
  std::vector<double> out(B * cout * L);
  const double* bp = bias.defined() ? bias.data().data() : nullptr;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      const double bo = bp ? bp[o] : 0.0;
      const double* src = ymat.data() + o * cols + b * L;
      double* dst = out.data() + (b * cout + o) * L;
      for (std::size_t t = 0; t < L; ++t) dst[t] = src[t] + bo;
    }
  }

  std::vector<Tensor> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor::make_result(
      {B, cout, L}, std::move(out), std::move(inputs),
      [x, kernel, bias, xcol, B, cin, cout, L, K, half, d, rows, cols](detail::Node& o) {
        RowMat dy(cout, cols);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t oc = 0; oc < cout; ++oc)
            std::copy_n(o.grad.data() + (b * cout + oc) * L, L, dy.data() + oc * cols + b * L);

        if (auto* gk = grad_of(kernel)) {
          MapMat dW(gk->data(), cout, rows);
          dW.noalias() += dy * CMapMat(xcol->data(), rows, cols).transpose();
        }
        if (bias.defined()) {
          if (auto* gb = grad_of(bias)) {
            for (std::size_t oc = 0; oc < cout; ++oc) (*gb)[oc] += dy.row(oc).sum();
          }
        }
        if (auto* gx = grad_of(x)) {
          RowMat dcol = CMapMat(kernel.data().data(), cout, rows).transpose() * dy;
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t k = 0; k < K; ++k) {
              const long off = (static_cast<long>(k) - half) * d;
              const long t0 = std::max(0L, -off);
              const long t1 = std::min(static_cast<long>(L), static_cast<long>(L) - off);
              const double* row = dcol.data() + (c * K + k) * cols;
              for (std::size_t b = 0; b < B; ++b) {
                double* dst = gx->data() + (b * cin + c) * L;
                for (long t = t0; t < t1; ++t) dst[t + off] += row[b * L + t];
              }
            }
          }
        }
      });
}

Tensor maxpool1d(const Tensor& x) {
  require_rank(x, 3, "maxpool1d input");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t Lo = (L + 1) / 2;
  std::vector<double> out(B * C * Lo);
  auto arg = std::make_shared<std::vector<std::size_t>>(out.size());
  const double* xp = x.data().data();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const double* src = xp + bc * L;
    for (std::size_t j = 0; j < Lo; ++j) {
      std::size_t best = 2 * j;
      if (2 * j + 1 < L && src[2 * j + 1] > src[best]) best = 2 * j + 1;
      out[bc * Lo + j] = src[best];
      (*arg)[bc * Lo + j] = bc * L + best;
    }
  }
  return Tensor::make_result({B, C, Lo}, std::move(out), {x}, [x, arg](detail::Node& o) {
    auto& gx = *grad_of(x);
    for (std::size_t i = 0; i < arg->size(); ++i) gx[(*arg)[i]] += o.grad[i];
  });
}

Tensor global_max_pool(const Tensor& x) {
  require_rank(x, 3, "global_max_pool input");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  std::vector<double> out(B * C);
  auto arg = std::make_shared<std::vector<std::size_t>>(B * C);
  const double* xp = x.data().data();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const double* src = xp + bc * L;
    std::size_t best = 0;
    for (std::size_t t = 1; t < L; ++t)
      if (src[t] > src[best]) best = t;
    out[bc] = src[best];
    (*arg)[bc] = bc * L + best;
  }
  return Tensor::make_result({B, C}, std::move(out), {x}, [x, arg](detail::Node& o) {
    auto& gx = *grad_of(x);
    for (std::size_t i = 0; i < arg->size(); ++i) gx[(*arg)[i]] += o.grad[i];
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor::make_result(x.shape(), std::move(out), {x}, [x](detail::Node& o) {
    auto& gx = *grad_of(x);
    const auto xv = x.data();
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > 0.0) gx[i] += o.grad[i];
  });
}

Tensor softmax(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("softmax needs rank >= 1");
  const std::size_t K = x.shape().back(), rows = x.numel() / K;
  std::vector<double> out(x.numel());
  const double* xp = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = xp + r * K;
    double* dst = out.data() + r * K;
    const double m = *std::max_element(src, src + K);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += (dst[k] = std::exp(src[k] - m));
    for (std::size_t k = 0; k < K; ++k) dst[k] /= z;
  }
  return Tensor::make_result(x.shape(), std::move(out), {x}, [x, K, rows](detail::Node& o) {
    auto& gx = *grad_of(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = o.value.data() + r * K;
      const double* gy = o.grad.data() + r * K;
      double dot = 0.0;
      for (std::size_t k = 0; k < K; ++k) dot += gy[k] * y[k];
      for (std::size_t k = 0; k < K; ++k) gx[r * K + k] += y[k] * (gy[k] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("log_softmax needs rank >= 1");
  const std::size_t K = x.shape().back(), rows = x.numel() / K;
  std::vector<double> out(x.numel());
  const double* xp = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = xp + r * K;
    const double m = *std::max_element(src, src + K);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(src[k] - m);
    const double lse = m + std::log(z);
    for (std::size_t k = 0; k < K; ++k) out[r * K + k] = src[k] - lse;
  }
  return Tensor::make_result(x.shape(), std::move(out), {x}, [x, K, rows](detail::Node& o) {
    auto& gx = *grad_of(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = o.value.data() + r * K;
      const double* gy = o.grad.data() + r * K;
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) total += gy[k];
      for (std::size_t k = 0; k < K; ++k) gx[r * K + k] += gy[k] - std::exp(y[k]) * total;
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  if (labels.size() != B) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_str(logits.shape()));
  }
  for (std::size_t i = 0; i < B; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= K) {
      throw IndexError("cross_entropy: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(K) + ")");
    }
  }
  auto probs = std::make_shared<std::vector<double>>(B * K);
  std::vector<int> lab(labels.begin(), labels.end());
  double total = 0.0;
  const double* xp = logits.data().data();
  for (std::size_t r = 0; r < B; ++r) {
    const double* src = xp + r * K;
    const double m = *std::max_element(src, src + K);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += ((*probs)[r * K + k] = std::exp(src[k] - m));
    for (std::size_t k = 0; k < K; ++k) (*probs)[r * K + k] /= z;
    total += m + std::log(z) - src[lab[r]];
  }
  return Tensor::make_result({1}, {total / static_cast<double>(B)}, {logits},
                             [logits, probs, lab = std::move(lab), B, K](detail::Node& o) {
                               auto& g = *grad_of(logits);
                               const double s = o.grad[0] / static_cast<double>(B);
                               for (std::size_t r = 0; r < B; ++r) {
                                 for (std::size_t k = 0; k < K; ++k) {
                                   const double onehot = static_cast<int>(k) == lab[r] ? 1.0 : 0.0;
                                   g[r * K + k] += s * ((*probs)[r * K + k] - onehot);
                                 }
                               }
                             });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [a, b](detail::Node& o) {
    for (const Tensor* t : {&a, &b}) {
      if (auto* g = grad_of(*t))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [a, b](detail::Node& o) {
    const auto av2 = a.data(), bv2 = b.data();
    if (auto* g = grad_of(a))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += o.grad[i] * bv2[i];
    if (auto* g = grad_of(b))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += o.grad[i] * av2[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return Tensor::make_result(a.shape(), std::move(out), {a}, [a, factor](detail::Node& o) {
    auto& g = *grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * o.grad[i];
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::make_result({1}, {total}, {a}, [a](detail::Node& o) {
    auto& g = *grad_of(a);
    for (auto& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor transpose12(const Tensor& x) {
  require_rank(x, 3, "transpose12 input");
  const std::size_t B = x.dim(0), A = x.dim(1), C = x.dim(2);
  std::vector<double> out(x.numel());
  const double* xp = x.data().data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < A; ++i)
      for (std::size_t j = 0; j < C; ++j) out[(b * C + j) * A + i] = xp[(b * A + i) * C + j];
  return Tensor::make_result({B, C, A}, std::move(out), {x}, [x, B, A, C](detail::Node& o) {
    auto& g = *grad_of(x);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < A; ++i)
        for (std::size_t j = 0; j < C; ++j) g[(b * A + i) * C + j] += o.grad[(b * C + j) * A + i];
  });
}

Tensor slice_axis1(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 3, "slice_axis1 input");
  const std::size_t B = x.dim(0), L = x.dim(1), D = x.dim(2);
  if (begin >= end || end > L) {
    throw IndexError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside axis of length " +
                     std::to_string(L));
  }
  const std::size_t n = end - begin;
  std::vector<double> out(B * n * D);
  const double* xp = x.data().data();
  for (std::size_t b = 0; b < B; ++b) std::copy_n(xp + (b * L + begin) * D, n * D, out.data() + b * n * D);
  return Tensor::make_result({B, n, D}, std::move(out), {x}, [x, B, L, D, n, begin](detail::Node& o) {
    auto& g = *grad_of(x);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < n * D; ++i) g[(b * L + begin) * D + i] += o.grad[b * n * D + i];
  });
}

Tensor time_mask(const Tensor& z, std::span<const std::uint8_t> keep) {
  require_rank(z, 3, "time_mask input");
  const std::size_t B = z.dim(0), L = z.dim(1), D = z.dim(2);
  if (keep.size() != B * L) {
    throw DimensionError("time_mask: " + std::to_string(keep.size()) + " mask entries for latent " +
                         shape_str(z.shape()));
  }
  std::vector<std::uint8_t> bits(keep.begin(), keep.end());
  std::vector<double> out(z.data().begin(), z.data().end());
  for (std::size_t bt = 0; bt < B * L; ++bt)
    if (!bits[bt]) std::fill_n(out.begin() + bt * D, D, 0.0);
  return Tensor::make_result(z.shape(), std::move(out), {z}, [z, bits = std::move(bits), D](detail::Node& o) {
    auto& g = *grad_of(z);
    for (std::size_t bt = 0; bt < bits.size(); ++bt)
      if (bits[bt])
        for (std::size_t j = 0; j < D; ++j) g[bt * D + j] += o.grad[bt * D + j];
  });
}

}  // namespace cleer::ops
