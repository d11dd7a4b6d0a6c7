#include <doctest.h>

#include <cmath>
#include <random>

#include "cleer/adam.hpp"
#include "cleer/error.hpp"
#include "cleer/gradcheck.hpp"
#include "cleer/gradcheck_suite.hpp"
#include "cleer/ops.hpp"
#include "oracles.hpp"

using namespace cleer;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool rg = true, double scale = 1.0) {
  return Tensor::from(shape, oracle::random_values(shape_numel(shape), rng, scale), rg);
}

// Weighted sum with fixed random weights, so each output element gets its own upstream gradient.
Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return ops::sum(ops::mul(y, random_tensor(y.shape(), rng, false)));
}

void require_gradcheck(const std::function<Tensor()>& fn, std::vector<Tensor> inputs) {
  const auto report = grad_check(fn, std::move(inputs));
  INFO(report.summary());
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("tensor construction validates shapes") {
  CHECK_THROWS_AS(Tensor::from({2, 3}, std::vector<double>(5)), DimensionError);
  CHECK_THROWS_AS(Tensor::zeros({2, 0}), DimensionError);
  auto t = Tensor::full({2, 2}, 1.5);
  CHECK(t.numel() == 4);
  CHECK(t.data()[3] == 1.5);
  CHECK(Tensor::scalar(2.0).item() == 2.0);
}

TEST_CASE("backward requires a scalar that tracks gradients") {
  auto a = Tensor::from({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(ops::scale(a, 2.0).backward(), ContractError);
  CHECK_THROWS_AS(Tensor::scalar(1.0).backward(), ContractError);
  ops::sum(ops::scale(a, 3.0)).backward();
  CHECK(a.grad()[0] == doctest::Approx(3.0));
  CHECK(a.grad()[1] == doctest::Approx(3.0));
}

TEST_CASE("no-grad guard records nothing") {
  auto a = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor s;
  {
    NoGradGuard g;
    CHECK_FALSE(grad_enabled());
    s = ops::sum(a);
  }
  CHECK_FALSE(s.requires_grad());
  CHECK(grad_enabled());
}

TEST_CASE("gradients accumulate through shared subexpressions") {
  auto a = Tensor::from({1}, {3.0}, true);
  auto b = ops::add(a, a);
  ops::sum(ops::add(b, a)).backward();
  CHECK(a.grad()[0] == doctest::Approx(3.0));
}

TEST_CASE("conv1d matches the loop oracle") {
  std::mt19937_64 rng(1);
  for (int dilation : {1, 2, 3, 5}) {
    for (std::size_t k : {1u, 3u, 5u}) {
      const std::size_t B = 2, Cin = 3, Cout = 4, L = 11;
      const auto xv = oracle::random_values(B * Cin * L, rng);
      const auto wv = oracle::random_values(Cout * Cin * k, rng);
      const auto bv = oracle::random_values(Cout, rng);
      const auto y = ops::conv1d_dilated(Tensor::from({B, Cin, L}, xv), Tensor::from({Cout, Cin, k}, wv), dilation,
                                         Tensor::from({Cout}, bv));
      const auto ref = oracle::conv1d({B, Cin, L, xv}, {Cout, Cin, k, wv}, dilation, bv);
      REQUIRE(y.shape() == Shape{B, Cout, L});
      for (std::size_t i = 0; i < ref.v.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref.v[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv1d rejects even kernels and bad dilation") {
  const auto x = Tensor::zeros({1, 2, 5});
  CHECK_THROWS_AS(ops::conv1d_dilated(x, Tensor::zeros({1, 2, 2}), 1), ConfigError);
  CHECK_THROWS_AS(ops::conv1d_dilated(x, Tensor::zeros({1, 2, 3}), 0), ConfigError);
  CHECK_THROWS_AS(ops::conv1d_dilated(x, Tensor::zeros({1, 3, 3}), 1), DimensionError);
}

TEST_CASE("maxpool halves with a pass-through tail") {
  const auto y = ops::maxpool1d(Tensor::from({1, 1, 5}, {1.0, 4.0, 3.0, 2.0, 7.0}));
  REQUIRE(y.shape() == Shape{1, 1, 3});
  CHECK(y.data()[0] == 4.0);
  CHECK(y.data()[1] == 3.0);
  CHECK(y.data()[2] == 7.0);
}

TEST_CASE("maxpool tie sends the gradient to the lower index") {
  auto x = Tensor::from({1, 1, 2}, {2.0, 2.0}, true);
  ops::sum(ops::maxpool1d(x)).backward();
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("cross-entropy matches the oracle and validates labels") {
  std::mt19937_64 rng(2);
  const auto lv = oracle::random_values(12, rng, 3.0);
  const std::vector<int> labels{0, 2, 1, 2};
  const auto ce = ops::cross_entropy(Tensor::from({4, 3}, lv), labels);
  CHECK(ce.item() == doctest::Approx(oracle::cross_entropy(lv, 3, labels)).epsilon(1e-12));
  const std::vector<int> bad{0, 3, 1, 2};
  CHECK_THROWS_AS(ops::cross_entropy(Tensor::from({4, 3}, lv), bad), IndexError);
}

TEST_CASE("cross-entropy stays finite for extreme logits") {
  const std::vector<int> labels{1};
  const auto ce = ops::cross_entropy(Tensor::from({1, 3}, {1000.0, -1000.0, 0.0}), labels);
  CHECK(std::isfinite(ce.item()));
  CHECK(ce.item() == doctest::Approx(2000.0));
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(3);
  const auto p = ops::softmax(random_tensor({3, 5}, rng, false, 10.0));
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) s += p.data()[r * 5 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("slice and mask validate their arguments") {
  const auto x = Tensor::zeros({2, 4, 3});
  CHECK_THROWS_AS(ops::slice_axis1(x, 2, 5), IndexError);
  CHECK_THROWS_AS(ops::slice_axis1(x, 3, 3), IndexError);
  const std::vector<std::uint8_t> keep(7, 1);
  CHECK_THROWS_AS(ops::time_mask(x, keep), DimensionError);
}

TEST_CASE("gradient checks for every kernel") {
  std::mt19937_64 rng(4);

  SUBCASE("linear") {
    auto x = random_tensor({2, 3, 4}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({5}, rng);
    require_gradcheck([&] { return probe(ops::linear(x, w, b)); }, {x, w, b});
  }
  SUBCASE("conv1d dilated") {
    for (int d : {1, 2, 4}) {
      auto x = random_tensor({2, 3, 9}, rng), w = random_tensor({2, 3, 3}, rng), b = random_tensor({2}, rng);
      require_gradcheck([&] { return probe(ops::conv1d_dilated(x, w, d, b)); }, {x, w, b});
    }
  }
  SUBCASE("maxpool odd and even") {
    for (std::size_t l : {6u, 7u}) {
      auto x = random_tensor({2, 3, l}, rng);
      require_gradcheck([&] { return probe(ops::maxpool1d(x)); }, {x});
    }
  }
  SUBCASE("global max pool") {
    auto x = random_tensor({2, 3, 5}, rng);
    require_gradcheck([&] { return probe(ops::global_max_pool(x)); }, {x});
  }
  SUBCASE("relu") {
    auto x = random_tensor({3, 4}, rng);
    require_gradcheck([&] { return probe(ops::relu(x)); }, {x});
  }
  SUBCASE("softmax and log_softmax") {
    auto x = random_tensor({3, 4}, rng);
    require_gradcheck([&] { return probe(ops::softmax(x)); }, {x});
    require_gradcheck([&] { return probe(ops::log_softmax(x)); }, {x});
  }
  SUBCASE("cross-entropy") {
    auto x = random_tensor({4, 3}, rng);
    const std::vector<int> labels{2, 0, 1, 1};
    require_gradcheck([&] { return ops::cross_entropy(x, labels); }, {x});
  }
  SUBCASE("elementwise and reductions") {
    auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    require_gradcheck([&] { return probe(ops::add(a, b)); }, {a, b});
    require_gradcheck([&] { return probe(ops::mul(a, b)); }, {a, b});
    require_gradcheck([&] { return probe(ops::scale(a, -1.7)); }, {a});
    require_gradcheck([&] { return ops::mean(ops::mul(a, a)); }, {a});
  }
  SUBCASE("transpose, slice and mask") {
    auto x = random_tensor({2, 5, 3}, rng);
    const std::vector<std::uint8_t> keep{1, 0, 1, 1, 0, 0, 1, 1, 1, 0};
    require_gradcheck([&] { return probe(ops::transpose12(x)); }, {x});
    require_gradcheck([&] { return probe(ops::slice_axis1(x, 1, 4)); }, {x});
    require_gradcheck([&] { return probe(ops::time_mask(x, keep)); }, {x});
  }
}

TEST_CASE("grad_check flags a wrong backward") {
  auto x = Tensor::from({2}, {0.3, -0.4}, true);
  // Forward y = 2x but the recorded gradient is 3.
  auto wrong = [&] {
    std::vector<double> v{2 * x.data()[0], 2 * x.data()[1]};
    return ops::sum(Tensor::make_result({2}, v, {x}, [x](detail::Node& o) {
      auto& g = x.node()->ensure_grad();
      for (std::size_t i = 0; i < 2; ++i) g[i] += 3.0 * o.grad[i];
    }));
  };
  const auto report = grad_check(wrong, {x});
  CHECK_FALSE(report.passed);
  CHECK(report.max_rel_error > 0.3);
}

TEST_CASE("grad_check rejects non-scalar outputs") {
  auto x = Tensor::from({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(grad_check([&] { return ops::scale(x, 2.0); }, {x}), ContractError);
}

TEST_CASE("adam matches the textbook update") {
  std::mt19937_64 rng(5);
  auto w = random_tensor({6}, rng);
  std::vector<double> ref(w.data().begin(), w.data().end());
  Adam opt({w}, 0.01);
  oracle::Adam oref;
  oref.lr = 0.01;
  for (int step = 0; step < 25; ++step) {
    auto target = random_tensor({6}, rng, false);
    auto diff = ops::add(w, ops::scale(target, -1.0));
    ops::sum(ops::mul(diff, diff)).backward();
    std::vector<double> g(w.grad().begin(), w.grad().end());
    opt.step();
    oref.step(ref, g);
    CHECK_FALSE((w.has_grad() && w.grad()[0] != 0.0));
  }
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(w.data()[i] == doctest::Approx(ref[i]).epsilon(1e-13));
  CHECK(opt.state().step_count == 25);
}

TEST_CASE("adam refuses parameters without gradients") {
  auto w = Tensor::from({2}, {1.0, 2.0}, true);
  Adam opt({w});
  CHECK_THROWS_AS(opt.step(), ContractError);
}

TEST_CASE("adam lowers a quadratic") {
  auto w = Tensor::from({3}, {2.0, -1.0, 0.5}, true);
  Adam opt({w}, 0.05);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 200; ++i) {
    auto loss = ops::sum(ops::mul(w, w));
    if (i == 0) first = loss.item();
    last = loss.item();
    loss.backward();
    opt.step();
  }
  CHECK(last < 1e-2 * first);
}

TEST_CASE("gradcheck suite covers every kernel and the joint closure") {
  const auto checks = run_gradcheck_suite(3);
  CHECK(checks.size() >= 20);
  for (const auto& c : checks) {
    INFO(c.name << ": " << c.report.summary());
    CHECK(c.report.passed);
    CHECK(c.report.max_rel_error < 1e-4);
  }
  CHECK(checks.back().name.rfind("joint_loss", 0) == 0);
}
