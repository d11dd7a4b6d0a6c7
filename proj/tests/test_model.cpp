#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cleer/error.hpp"
#include "cleer/gradcheck.hpp"
#include "cleer/losses.hpp"
#include "cleer/model.hpp"
#include "cleer/ops.hpp"
#include "oracles.hpp"

using namespace cleer;

namespace {

EncoderConfig toy_encoder(std::size_t c = 3) {
  EncoderConfig e;
  e.in_channels = c;
  e.hidden_dim = 8;
  e.repr_dim = 12;
  e.dilation_schedule = {1, 2};
  return e;
}

ClassifierConfig toy_classifier() {
  ClassifierConfig k;
  k.in_dim = 12;
  k.conv_channels = 6;
  k.fc_dims = {5};
  return k;
}

Tensor random_input(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Tensor::from(shape, oracle::random_values(shape_numel(shape), rng));
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cleer_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("encoder and classifier shapes") {
  Rng rng(1);
  Model m(toy_encoder(), toy_classifier(), rng);
  const auto x = random_input({2, 9, 3}, 2);
  const auto r = m.encoder.encode(x);
  CHECK(r.shape() == Shape{2, 9, 12});
  CHECK(m.encoder.input_projection(x).shape() == Shape{2, 9, 8});
  const auto p = m.classifier.classify(r);
  CHECK(p.shape() == Shape{2, 3});
  for (std::size_t i = 0; i < 2; ++i) CHECK(p.data()[i * 3] + p.data()[i * 3 + 1] + p.data()[i * 3 + 2] ==
                                            doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(m.encoder.encode(random_input({2, 9, 4}, 3)), DimensionError);
}

TEST_CASE("config validation") {
  auto e = toy_encoder();
  e.kernel_size = 2;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e = toy_encoder();
  e.dilation_schedule = {};
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e = toy_encoder();
  e.dilation_schedule = {1, 0};
  CHECK_THROWS_AS(e.validate(), ConfigError);
  auto k = toy_classifier();
  k.n_classes = 0;
  CHECK_THROWS_AS(k.validate(), ConfigError);
  CHECK(EncoderConfig::doubling_schedule(5) == std::vector<int>{1, 2, 4, 8, 16});
}

TEST_CASE("receptive field bounds the influence of one timestamp") {
  Rng rng(5);
  EncoderConfig cfg = toy_encoder();
  cfg.dilation_schedule = {1, 2, 4};
  Encoder enc(cfg, rng);
  const std::size_t half = (cfg.receptive_field() - 1) / 2;
  CHECK(cfg.receptive_field() == 1 + 2 * 2 * 7);
  const std::size_t L = 2 * half + 21, t0 = half + 10;
  auto x = random_input({1, L, 3}, 6);
  const auto base = enc.encode(x);
  std::vector<double> bumped(x.data().begin(), x.data().end());
  for (std::size_t c = 0; c < 3; ++c) bumped[t0 * 3 + c] += 1.0;
  const auto moved = enc.encode(Tensor::from({1, L, 3}, bumped));
  for (std::size_t t = 0; t < L; ++t) {
    double diff = 0.0;
    for (std::size_t d = 0; d < 12; ++d) diff += std::abs(moved.data()[t * 12 + d] - base.data()[t * 12 + d]);
    const std::size_t dist = t > t0 ? t - t0 : t0 - t;
    if (dist > half) CHECK(diff == 0.0);
  }
  double edge = 0.0;
  for (std::size_t d = 0; d < 12; ++d) edge += std::abs(moved.data()[(t0 + half) * 12 + d] - base.data()[(t0 + half) * 12 + d]);
  CHECK(edge > 0.0);
}

TEST_CASE("encoding is per-item independent") {
  Rng rng(7);
  Encoder enc(toy_encoder(), rng);
  const auto x = random_input({3, 6, 3}, 8);
  const auto full = enc.encode(x);
  std::vector<double> second(x.data().begin() + 18, x.data().begin() + 36);
  const auto single = enc.encode(Tensor::from({1, 6, 3}, second));
  for (std::size_t i = 0; i < single.numel(); ++i) CHECK(single.data()[i] == doctest::Approx(full.data()[72 + i]));
}

TEST_CASE("timestamp masking changes only what the mask reaches") {
  Rng rng(9);
  Encoder enc(toy_encoder(), rng);
  const auto x = random_input({2, 7, 3}, 10);
  std::vector<MaskVector> ones{MaskVector::ones(7), MaskVector::ones(7)};
  const auto a = enc.encode(x);
  const auto b = enc.encode(x, ones);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
  std::vector<MaskVector> some{MaskVector::ones(7), {{1, 1, 1, 0, 1, 1, 1}}};
  const auto c = enc.encode(x, some);
  for (std::size_t i = 0; i < 7 * 12; ++i) CHECK(c.data()[i] == a.data()[i]);
  double diff = 0.0;
  for (std::size_t i = 7 * 12; i < a.numel(); ++i) diff += std::abs(c.data()[i] - a.data()[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("parameter registry") {
  Rng rng(11);
  Model m(toy_encoder(), toy_classifier(), rng);
  const auto named = m.named_parameters();
  CHECK(named.size() == m.all_tensors().size());
  CHECK(m.encoder_tensors().size() + m.classifier_tensors().size() == named.size());
  CHECK(named.front().name == "encoder.proj.weight");
  for (const auto& p : named) CHECK(p.tensor.requires_grad());
}

TEST_CASE("initialization is seed deterministic") {
  Rng a(12), b(12), c(13);
  Model ma(toy_encoder(), toy_classifier(), a), mb(toy_encoder(), toy_classifier(), b),
      mc(toy_encoder(), toy_classifier(), c);
  const auto pa = ma.all_tensors(), pb = mb.all_tensors(), pc = mc.all_tensors();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t j = 0; j < pa[i].numel(); ++j) {
      CHECK(pa[i].data()[j] == pb[i].data()[j]);
      differs |= pa[i].data()[j] != pc[i].data()[j];
    }
  }
  CHECK(differs);
}

TEST_CASE("joint loss closure passes the gradient check") {
  Rng rng(14);
  Model m(toy_encoder(), toy_classifier(), rng);
  const auto x = random_input({2, 8, 3}, 15);
  const std::vector<int> labels{0, 2};
  std::vector<MaskVector> masks{{{1, 0, 1, 1, 1, 0}}, {{1, 1, 0, 1, 1, 1}}};
  auto closure = [&] {
    // crop a1=1 b1=6, a2=3 b2=8 -> overlap timestamps 3..6
    const auto v1 = ops::slice_axis1(x, 0, 6);
    const auto v2 = ops::slice_axis1(x, 2, 8);
    const auto r1 = m.encoder.encode(v1, masks);
    const auto r2 = m.encoder.encode(v2, masks);
    const auto hcl = hcl_loss(ops::slice_axis1(r1, 2, 6), ops::slice_axis1(r2, 0, 4));
    return joint_loss(hcl, m.classifier.logits(m.encoder.encode(x)), labels, 1.0).loss;
  };
  const auto report = grad_check(closure, m.all_tensors());
  INFO(report.summary());
  CHECK(report.passed);
}

TEST_CASE("checkpoint round trip is exact after the float32 snap") {
  Rng rng(16);
  Model m(toy_encoder(), toy_classifier(), rng);
  m.snap_to_float32();
  const auto path = temp_path("model.ckpt");
  save_checkpoint(m, path, {{"note", "test"}});
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.meta.at("note") == "test");
  const auto a = m.named_parameters(), b = loaded.model.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].tensor.shape() == b[i].tensor.shape());
    for (std::size_t j = 0; j < a[i].tensor.numel(); ++j) CHECK(a[i].tensor.data()[j] == b[i].tensor.data()[j]);
  }
  const auto x = random_input({2, 8, 3}, 17);
  const auto la = m.classifier.logits(m.encoder.encode(x));
  const auto lb = loaded.model.classifier.logits(loaded.model.encoder.encode(x));
  for (std::size_t i = 0; i < la.numel(); ++i) CHECK(la.data()[i] == lb.data()[i]);
}

TEST_CASE("corrupt checkpoints raise format errors") {
  Rng rng(18);
  Model m(toy_encoder(), toy_classifier(), rng);
  const auto path = temp_path("corrupt.ckpt");
  save_checkpoint(m, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 7);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << "CKPX";
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), Error);
}
