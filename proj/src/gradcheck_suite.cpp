#include "cleer/gradcheck_suite.hpp"

#include <random>

#include "cleer/losses.hpp"
#include "cleer/model.hpp"
#include "cleer/ops.hpp"

namespace cleer {

namespace {

Tensor draw(const Shape& shape, std::mt19937_64& rng, bool rg = true) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = nd(rng);
  return Tensor::from(shape, std::move(v), rg);
}

}  // namespace

std::vector<KernelCheck> run_gradcheck_suite(std::uint64_t seed, const GradCheckOptions& options) {
  std::mt19937_64 rng(seed);
  std::vector<KernelCheck> out;
  auto check = [&](const std::string& name, const std::function<Tensor()>& fn, std::vector<Tensor> inputs) {
    out.push_back({name, grad_check(fn, std::move(inputs), options)});
  };
  // Contract each output with fixed random weights so every element carries its own upstream gradient.
  auto probe = [&](const Tensor& like) {
    const Tensor w = draw(like.shape(), rng, false);
    return [w](const Tensor& y) { return ops::sum(ops::mul(y, w)); };
  };

  {
    auto x = draw({2, 3, 4}, rng), w = draw({4, 5}, rng), b = draw({5}, rng);
    auto p = probe(Tensor::zeros({2, 3, 5}));
    check("linear", [=] { return p(ops::linear(x, w, b)); }, {x, w, b});
  }
  for (int d : {1, 2, 4}) {
    auto x = draw({2, 3, 9}, rng), w = draw({2, 3, 3}, rng), b = draw({2}, rng);
    auto p = probe(Tensor::zeros({2, 2, 9}));
    check("conv1d_dilated(d=" + std::to_string(d) + ")", [=] { return p(ops::conv1d_dilated(x, w, d, b)); },
          {x, w, b});
  }
  for (std::size_t l : {6u, 7u}) {
    auto x = draw({2, 3, l}, rng);
    auto p = probe(Tensor::zeros({2, 3, (l + 1) / 2}));
    check("maxpool1d(L=" + std::to_string(l) + ")", [=] { return p(ops::maxpool1d(x)); }, {x});
  }
  {
    auto x = draw({2, 3, 5}, rng);
    auto p = probe(Tensor::zeros({2, 3}));
    check("global_max_pool", [=] { return p(ops::global_max_pool(x)); }, {x});
  }
  {
    auto x = draw({3, 4}, rng);
    auto p = probe(x);
    check("relu", [=] { return p(ops::relu(x)); }, {x});
    check("softmax", [=] { return p(ops::softmax(x)); }, {x});
    check("log_softmax", [=] { return p(ops::log_softmax(x)); }, {x});
  }
  {
    auto x = draw({4, 3}, rng);
    const std::vector<int> labels{2, 0, 1, 1};
    check("cross_entropy", [=] { return ops::cross_entropy(x, labels); }, {x});
  }
  {
    auto a = draw({2, 3}, rng), b = draw({2, 3}, rng);
    auto p = probe(a);
    check("add", [=] { return p(ops::add(a, b)); }, {a, b});
    check("mul", [=] { return p(ops::mul(a, b)); }, {a, b});
    check("scale", [=] { return p(ops::scale(a, -1.7)); }, {a});
    check("mean", [=] { return ops::mean(ops::mul(a, a)); }, {a});
  }
  {
    auto x = draw({2, 5, 3}, rng);
    const std::vector<std::uint8_t> keep{1, 0, 1, 1, 0, 0, 1, 1, 1, 0};
    auto pt = probe(Tensor::zeros({2, 3, 5}));
    auto ps = probe(Tensor::zeros({2, 3, 3}));
    auto pm = probe(x);
    check("transpose12", [=] { return pt(ops::transpose12(x)); }, {x});
    check("slice_axis1", [=] { return ps(ops::slice_axis1(x, 1, 4)); }, {x});
    check("time_mask", [=] { return pm(ops::time_mask(x, keep)); }, {x});
  }
  {
    auto z = draw({3, 5, 4}, rng), zp = draw({3, 5, 4}, rng);
    check("tcl_loss", [=] { return tcl_loss(z, zp); }, {z, zp});
    check("icl_loss", [=] { return icl_loss(z, zp); }, {z, zp});
    check("dcl_loss", [=] { return dcl_loss(z, zp); }, {z, zp});
    check("hcl_loss", [=] { return hcl_loss(z, zp).loss; }, {z, zp});
    check("hcl_loss(symmetrized)", [=] { return hcl_loss(z, zp, {true}).loss; }, {z, zp});
  }
  {
    // Toy end-to-end closure: crop [1,6] and [3,8], per-item masks, joint objective.
    EncoderConfig enc;
    enc.in_channels = 3;
    enc.hidden_dim = 8;
    enc.repr_dim = 12;
    enc.dilation_schedule = {1, 2};
    ClassifierConfig cls;
    cls.in_dim = 12;
    cls.conv_channels = 6;
    cls.fc_dims = {5};
    Rng init(seed + 1);
    auto model = std::make_shared<Model>(enc, cls, init);
    const Tensor x = draw({2, 8, 3}, rng, false);
    const std::vector<int> labels{0, 2};
    const std::vector<MaskVector> masks{{{1, 0, 1, 1, 1, 0}}, {{1, 1, 0, 1, 1, 1}}};
    check("joint_loss(toy model)",
          [=] {
            const Tensor r1 = model->encoder.encode(ops::slice_axis1(x, 0, 6), masks);
            const Tensor r2 = model->encoder.encode(ops::slice_axis1(x, 2, 8), masks);
            const auto hcl = hcl_loss(ops::slice_axis1(r1, 2, 6), ops::slice_axis1(r2, 0, 4));
            return joint_loss(hcl, model->classifier.logits(model->encoder.encode(x)), labels, 1.0).loss;
          },
          model->all_tensors());
  }
  return out;
}

}  // namespace cleer
