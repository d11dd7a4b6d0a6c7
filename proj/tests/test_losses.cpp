#include <doctest.h>

#include <cmath>
#include <random>

#include "cleer/error.hpp"
#include "cleer/gradcheck.hpp"
#include "cleer/losses.hpp"
#include "cleer/ops.hpp"
#include "oracles.hpp"

using namespace cleer;

namespace {

struct Pair {
  oracle::Cube z, zp;
  Tensor tz, tzp;
};

Pair random_pair(std::size_t b, std::size_t k, std::size_t d, std::mt19937_64& rng, bool rg = false) {
  Pair p;
  p.z = {b, k, d, oracle::random_values(b * k * d, rng)};
  p.zp = {b, k, d, oracle::random_values(b * k * d, rng)};
  p.tz = Tensor::from({b, k, d}, p.z.v, rg);
  p.tzp = Tensor::from({b, k, d}, p.zp.v, rg);
  return p;
}

}  // namespace

TEST_CASE("losses match the loop oracles over a randomized sweep") {
  std::mt19937_64 rng(21);
  int cases = 0;
  for (std::size_t b = 1; b <= 4; ++b)
    for (std::size_t k = 1; k <= 8; ++k)
      for (std::size_t d = 1; d <= 5; d += 2) {
        const auto p = random_pair(b, k, d, rng);
        CHECK(tcl_loss(p.tz, p.tzp).item() == doctest::Approx(oracle::tcl(p.z, p.zp)).epsilon(1e-11));
        CHECK(icl_loss(p.tz, p.tzp).item() == doctest::Approx(oracle::icl(p.z, p.zp)).epsilon(1e-11));
        CHECK(dcl_loss(p.tz, p.tzp).item() == doctest::Approx(oracle::dcl(p.z, p.zp)).epsilon(1e-11));
        CHECK(hcl_loss(p.tz, p.tzp).loss.item() == doctest::Approx(oracle::hcl(p.z, p.zp)).epsilon(1e-11));
        ++cases;
      }
  CHECK(cases >= 96);
}

TEST_CASE("analytic identities") {
  std::mt19937_64 rng(22);
  SUBCASE("temporal loss vanishes at K = 1 and instance loss at B = 1") {
    const auto a = random_pair(3, 1, 4, rng);
    CHECK(tcl_loss(a.tz, a.tzp).item() == 0.0);
    const auto b = random_pair(1, 5, 4, rng);
    CHECK(icl_loss(b.tz, b.tzp).item() == 0.0);
  }
  SUBCASE("all-zero representations") {
    for (std::size_t b : {1u, 2u, 5u})
      for (std::size_t k : {1u, 3u, 8u}) {
        const auto z = Tensor::zeros({b, k, 3});
        CHECK(std::abs(tcl_loss(z, z).item() - std::log(2.0 * k - 1)) <= 1e-12);
        CHECK(std::abs(icl_loss(z, z).item() - std::log(2.0 * b - 1)) <= 1e-12);
      }
  }
  SUBCASE("hierarchy depth") {
    CHECK(hierarchy_levels(8) == 4);
    CHECK(hierarchy_levels(1) == 1);
    for (std::size_t k = 1; k <= 300; ++k) {
      CHECK(hierarchy_levels(k) == static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(k)))) + 1);
    }
    const auto p = random_pair(2, 8, 2, rng);
    const auto r = hcl_loss(p.tz, p.tzp);
    REQUIRE(r.breakdown.per_level.size() == 4);
    CHECK(r.breakdown.per_level[0].length == 8);
    CHECK(r.breakdown.per_level[3].length == 1);
    CHECK(r.breakdown.per_level[3].tcl == 0.0);
  }
}

TEST_CASE("hcl breakdown is consistent") {
  std::mt19937_64 rng(23);
  const auto p = random_pair(3, 7, 4, rng);
  const auto r = hcl_loss(p.tz, p.tzp);
  double mean = 0.0;
  for (const auto& l : r.breakdown.per_level) {
    CHECK(l.dcl == doctest::Approx(l.tcl + l.icl).epsilon(1e-14));
    mean += l.dcl;
  }
  mean /= static_cast<double>(r.breakdown.per_level.size());
  CHECK(r.breakdown.hcl == doctest::Approx(mean).epsilon(1e-14));
  CHECK(r.breakdown.total == r.breakdown.hcl);
}

TEST_CASE("joint loss adds weighted cross-entropy") {
  std::mt19937_64 rng(24);
  const auto p = random_pair(2, 4, 3, rng);
  const auto hcl = hcl_loss(p.tz, p.tzp);
  const std::vector<double> lv{0.1, 0.5, -0.2, 1.0, 0.0, 0.3};
  const std::vector<int> labels{1, 0};
  const auto j = joint_loss(hcl, Tensor::from({2, 3}, lv), labels, 0.5);
  CHECK(j.breakdown.class_loss == doctest::Approx(oracle::cross_entropy(lv, 3, labels)).epsilon(1e-13));
  CHECK(j.loss.item() == doctest::Approx(hcl.breakdown.hcl + 0.5 * j.breakdown.class_loss).epsilon(1e-13));
}

TEST_CASE("symmetrized loss averages both view orders") {
  std::mt19937_64 rng(25);
  const auto p = random_pair(3, 5, 2, rng);
  const ContrastOptions sym{true};
  CHECK(tcl_loss(p.tz, p.tzp, sym).item() ==
        doctest::Approx(0.5 * (oracle::tcl(p.z, p.zp) + oracle::tcl(p.zp, p.z))).epsilon(1e-12));
  CHECK(icl_loss(p.tz, p.tzp, sym).item() ==
        doctest::Approx(0.5 * (oracle::icl(p.z, p.zp) + oracle::icl(p.zp, p.z))).epsilon(1e-12));
}

TEST_CASE("loss inputs are validated") {
  CHECK_THROWS_AS(tcl_loss(Tensor::zeros({2, 3, 4}), Tensor::zeros({2, 4, 4})), DimensionError);
  CHECK_THROWS_AS(icl_loss(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
  CHECK_THROWS_AS(hcl_loss(Tensor::zeros({1, 3, 4}), Tensor::zeros({2, 3, 4})), DimensionError);
}

TEST_CASE("loss gradients pass finite-difference checks") {
  std::mt19937_64 rng(26);
  for (auto [b, k] : {std::pair<std::size_t, std::size_t>{2, 5}, {3, 1}, {1, 4}, {4, 8}}) {
    auto p = random_pair(b, k, 3, rng, true);
    for (bool sym : {false, true}) {
      const ContrastOptions o{sym};
      auto run = [&](const std::function<Tensor()>& fn) {
        const auto report = grad_check(fn, {p.tz, p.tzp});
        INFO(report.summary());
        CHECK(report.passed);
      };
      run([&] { return tcl_loss(p.tz, p.tzp, o); });
      run([&] { return icl_loss(p.tz, p.tzp, o); });
      run([&] { return hcl_loss(p.tz, p.tzp, o).loss; });
    }
  }
}

TEST_CASE("loss is invariant to permuting instances") {
  std::mt19937_64 rng(27);
  const auto p = random_pair(3, 4, 2, rng);
  oracle::Cube z2 = p.z, zp2 = p.zp;
  const std::size_t perm[] = {2, 0, 1};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t d = 0; d < 2; ++d) {
        z2(i, t, d) = p.z(perm[i], t, d);
        zp2(i, t, d) = p.zp(perm[i], t, d);
      }
  const auto a = hcl_loss(p.tz, p.tzp).loss.item();
  const auto b = hcl_loss(Tensor::from({3, 4, 2}, z2.v), Tensor::from({3, 4, 2}, zp2.v)).loss.item();
  CHECK(a == doctest::Approx(b).epsilon(1e-13));
}
