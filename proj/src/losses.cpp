#include "cleer/losses.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>

#include "cleer/error.hpp"
#include "cleer/ops.hpp"

namespace cleer {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Axis { time, batch };

void check_views(const Tensor& z, const Tensor& zp, const char* what) {
  if (z.rank() != 3) throw DimensionError(std::string(what) + " expects [B, K, D], got " + shape_str(z.shape()));
  if (z.shape() != zp.shape()) {
    throw DimensionError(std::string(what) + ": views have shapes " + shape_str(z.shape()) + " and " +
                         shape_str(zp.shape()));
  }
}

// Softmax weights of one block, kept for the backward pass.
struct BlockWeights {
  RowMat cross;  // M x M, minus identity already applied
  RowMat self;   // M x M, zero diagonal
};

// Contrasts the rows of each block against each other. A block is one
// instance (rows = timestamps) for the temporal loss, or one timestamp
// (rows = instances) for the instance loss.
Tensor contrast(const Tensor& z, const Tensor& zp, Axis axis) {
  const std::size_t B = z.dim(0), K = z.dim(1), D = z.dim(2);
  const std::size_t blocks = axis == Axis::time ? B : K;
  const std::size_t M = axis == Axis::time ? K : B;
  auto offset = [=](std::size_t g, std::size_t r) {
    return axis == Axis::time ? (g * K + r) * D : (r * K + g) * D;
  };

  auto weights = std::make_shared<std::vector<BlockWeights>>(blocks);
  const double* zv = z.data().data();
  const double* pv = zp.data().data();
  double total = 0.0;
  RowMat A(M, D), P(M, D);
  for (std::size_t g = 0; g < blocks; ++g) {
    for (std::size_t r = 0; r < M; ++r) {
      std::copy_n(zv + offset(g, r), D, A.row(r).data());
      std::copy_n(pv + offset(g, r), D, P.row(r).data());
    }
    RowMat sc = A * P.transpose();
    RowMat ss = A * A.transpose();
    auto& w = (*weights)[g];
    w.cross.resize(M, M);
    w.self.resize(M, M);
    for (std::size_t r = 0; r < M; ++r) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < M; ++c) {
        m = std::max(m, sc(r, c));
        if (c != r) m = std::max(m, ss(r, c));
      }
      double s = 0.0;
      for (std::size_t c = 0; c < M; ++c) {
        s += (w.cross(r, c) = std::exp(sc(r, c) - m));
        s += (w.self(r, c) = c != r ? std::exp(ss(r, c) - m) : 0.0);
      }
      total += m + std::log(s) - sc(r, r);
      w.cross.row(r) /= s;
      w.self.row(r) /= s;
      w.cross(r, r) -= 1.0;
    }
  }
  const double count = static_cast<double>(B * K);

  return Tensor::make_result({1}, {total / count}, {z, zp}, [=](detail::Node& o) {
    const double scale = o.grad[0] / count;
    std::vector<double>* gz = z.requires_grad() ? &z.node()->ensure_grad() : nullptr;
    std::vector<double>* gp = zp.requires_grad() ? &zp.node()->ensure_grad() : nullptr;
    const double* zv2 = z.data().data();
    const double* pv2 = zp.data().data();
    RowMat A2(M, D), P2(M, D);
    for (std::size_t g = 0; g < blocks; ++g) {
      for (std::size_t r = 0; r < M; ++r) {
        std::copy_n(zv2 + offset(g, r), D, A2.row(r).data());
        std::copy_n(pv2 + offset(g, r), D, P2.row(r).data());
      }
      const auto& w = (*weights)[g];
      if (gz) {
        RowMat dA = w.cross * P2 + (w.self + w.self.transpose()) * A2;
        for (std::size_t r = 0; r < M; ++r) {
          double* dst = gz->data() + offset(g, r);
          for (std::size_t j = 0; j < D; ++j) dst[j] += scale * dA(r, j);
        }
      }
      if (gp) {
        RowMat dP = w.cross.transpose() * A2;
        for (std::size_t r = 0; r < M; ++r) {
          double* dst = gp->data() + offset(g, r);
          for (std::size_t j = 0; j < D; ++j) dst[j] += scale * dP(r, j);
        }
      }
    }
  });
}

Tensor maybe_symmetric(const Tensor& z, const Tensor& zp, Axis axis, const ContrastOptions& options) {
  if (!options.symmetrize) return contrast(z, zp, axis);
  return ops::scale(ops::add(contrast(z, zp, axis), contrast(zp, z, axis)), 0.5);
}

// Max-pool along the time axis of [B, K, D].
Tensor pool_time(const Tensor& x) { return ops::transpose12(ops::maxpool1d(ops::transpose12(x))); }

}  // namespace

Tensor tcl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options) {
  check_views(z, z_prime, "tcl_loss");
  return maybe_symmetric(z, z_prime, Axis::time, options);
}

Tensor icl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options) {
  check_views(z, z_prime, "icl_loss");
  return maybe_symmetric(z, z_prime, Axis::batch, options);
}

Tensor dcl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options) {
  return ops::add(tcl_loss(z, z_prime, options), icl_loss(z, z_prime, options));
}

std::size_t hierarchy_levels(std::size_t k) {
  std::size_t levels = 1;
  while (k > 1) {
    k = (k + 1) / 2;
    ++levels;
  }
  return levels;
}

LossResult hcl_loss(const Tensor& z, const Tensor& z_prime, const ContrastOptions& options) {
  check_views(z, z_prime, "hcl_loss");
  LossResult out;
  Tensor a = z, b = z_prime;
  Tensor acc;
  for (int level = 0;; ++level) {
    Tensor tcl = tcl_loss(a, b, options);
    Tensor icl = icl_loss(a, b, options);
    Tensor dcl = ops::add(tcl, icl);
    out.breakdown.per_level.push_back({level, a.dim(1), tcl.item(), icl.item(), dcl.item()});
    acc = acc.defined() ? ops::add(acc, dcl) : dcl;
    if (a.dim(1) == 1) break;
    a = pool_time(a);
    b = pool_time(b);
  }
  out.loss = ops::scale(acc, 1.0 / static_cast<double>(out.breakdown.per_level.size()));
  out.breakdown.hcl = out.loss.item();
  out.breakdown.total = out.breakdown.hcl;
  return out;
}

LossResult joint_loss(const LossResult& hcl, const Tensor& class_logits, std::span<const int> labels,
                      double lambda_class) {
  Tensor ce = ops::cross_entropy(class_logits, labels);
  LossResult out;
  out.loss = ops::add(hcl.loss, ops::scale(ce, lambda_class));
  out.breakdown = hcl.breakdown;
  out.breakdown.class_loss = ce.item();
  out.breakdown.total = out.loss.item();
  return out;
}

}  // namespace cleer
