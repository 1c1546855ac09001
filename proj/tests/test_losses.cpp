#include <doctest.h>

#include <cmath>
#include <random>

#include "citgan/core/errors.hpp"
#include "citgan/losses.hpp"
#include "support/loss_gradients.hpp"

using namespace citgan;

namespace {

Var make(std::vector<int> shape, std::vector<double> values) { return Var::constant(Tensor(std::move(shape), std::move(values))); }

std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("adversarial objective at zero logits is 2 log 0.5") {
    const Var z = make({2, 3}, std::vector<double>(6, 0.0));
    CHECK(std::abs(adversarial_loss(z, {0, 2}, z, {1, 1}).value().item() - (-1.3862943611198906)) < 1e-9);
  }

  TEST_CASE("perfect discriminator drives the objective to 0") {
    const Var real = make({2, 2}, {60.0, 0.0, 0.0, 60.0});
    const Var fake = make({2, 2}, {-60.0, 0.0, 0.0, -60.0});
    const double v = adversarial_loss(real, {0, 1}, fake, {0, 1}).value().item();
    CHECK(v <= 0.0);
    CHECK(v > -1e-20);
  }

  TEST_CASE("adversarial objective matches the expanded formula") {
    const auto r = uniform(12, -4, 4, 1), f = uniform(12, -4, 4, 2);
    const std::vector<int> d{0, 2, 1, 2}, dp{1, 1, 0, 2};
    double expect = 0;
    for (int n = 0; n < 4; ++n) {
      const double a = r[static_cast<std::size_t>(n * 3 + d[static_cast<std::size_t>(n)])];
      const double b = f[static_cast<std::size_t>(n * 3 + dp[static_cast<std::size_t>(n)])];
      expect += std::log(1.0 / (1.0 + std::exp(-a))) / 4.0 + std::log(1.0 - 1.0 / (1.0 + std::exp(-b))) / 4.0;
    }
    CHECK(std::abs(adversarial_loss(make({4, 3}, r), d, make({4, 3}, f), dp).value().item() - expect) < 1e-12);
    double ns = 0;
    for (int n = 0; n < 4; ++n)
      ns += -std::log(1.0 / (1.0 + std::exp(-f[static_cast<std::size_t>(n * 3 + dp[static_cast<std::size_t>(n)])]))) / 4;
    CHECK(std::abs(generator_adversarial_loss(make({4, 3}, f), dp).value().item() - ns) < 1e-12);
  }

  TEST_CASE("domain index out of range is a contract violation") {
    const Var z = make({1, 3}, {0, 0, 0});
    CHECK_THROWS_AS(adversarial_loss(z, {3}, z, {0}), ContractViolation);
    CHECK_THROWS_AS(adversarial_loss(z, {0}, z, {-1}), ContractViolation);
    CHECK_THROWS_AS(domain_classification_loss(z, {5}), ContractViolation);
  }

  TEST_CASE("style loss examples") {
    const auto s = uniform(32, -1, 1, 3);
    CHECK(style_loss(make({2, 16}, s), make({2, 16}, s)).value().item() == 0.0);
    std::vector<double> one(16, 0.0);
    one[0] = 1.0;
    CHECK(std::abs(style_loss(make({1, 16}, one), make({1, 16}, std::vector<double>(16, 0.0))).value().item() -
                   1.0 / 16) < 1e-12);
    const auto t = uniform(32, -1, 1, 4);
    double l1 = 0;
    for (std::size_t i = 0; i < 32; ++i) l1 += std::abs(s[i] - t[i]);
    CHECK(std::abs(style_loss(make({2, 16}, s), make({2, 16}, t)).value().item() - l1 / 32) < 1e-12);
    double l2 = 0;
    for (std::size_t i = 0; i < 32; ++i) l2 += (s[i] - t[i]) * (s[i] - t[i]);
    CHECK(std::abs(style_loss(make({2, 16}, s), make({2, 16}, t), Norm::L2).value().item() - l2 / 32) < 1e-12);
    CHECK_THROWS_AS(style_loss(make({2, 16}, s), make({1, 32}, t)), ContractViolation);
  }

  TEST_CASE("classification loss examples") {
    CHECK(domain_classification_loss(make({1, 3}, {200.0, 0.0, 0.0}), {0}).value().item() < 1e-12);
    CHECK(std::abs(domain_classification_loss(make({2, 3}, {0.3, 0.3, 0.3, -1, -1, -1}), {0, 2}).value().item() -
                   std::log(3.0)) < 1e-9);
    const auto z = uniform(8 * 4, -3, 3, 5);
    const std::vector<int> d{0, 1, 2, 3, 3, 2, 1, 0};
    double expect = 0;
    for (int n = 0; n < 8; ++n) {
      double denom = 0;
      for (int k = 0; k < 4; ++k) denom += std::exp(z[static_cast<std::size_t>(n * 4 + k)]);
      expect += -std::log(std::exp(z[static_cast<std::size_t>(n * 4 + d[static_cast<std::size_t>(n)])]) / denom) / 8;
    }
    CHECK(std::abs(domain_classification_loss(make({8, 4}, z), d).value().item() - expect) < 1e-12);
  }

  TEST_CASE("cycle loss examples") {
    const auto x = uniform(2 * 16, -1, 1, 6);
    CHECK(cycle_loss(make({2, 1, 4, 4}, x), make({2, 1, 4, 4}, x)).value().item() == 0.0);
    CHECK(std::abs(cycle_loss(make({1, 1, 4, 4}, std::vector<double>(16, 1.0)),
                              make({1, 1, 4, 4}, std::vector<double>(16, 0.0)))
                       .value()
                       .item() -
                   1.0) < 1e-12);
    const auto r = uniform(2 * 16, -1, 1, 7);
    double l1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) l1 += std::abs(x[i] - r[i]);
    CHECK(std::abs(cycle_loss(make({2, 1, 4, 4}, x), make({2, 1, 4, 4}, r)).value().item() - l1 / x.size()) < 1e-12);
    CHECK_THROWS_AS(cycle_loss(make({2, 1, 4, 4}, x), make({1, 2, 4, 4}, r)), ContractViolation);
  }

  TEST_CASE("total loss is the weighted sum") {
    CHECK(total_loss(1, 1, 1, 1, LossWeights{1, 1, 1}).total == 4.0);
    CHECK(total_loss(0.7, 2, 3, 4, LossWeights{0, 0, 0}).total == 0.7);
    const auto v = uniform(7, 0, 3, 8);
    const LossReport r = total_loss(v[0] - 1.5, v[1], v[2], v[3], LossWeights{v[4], v[5], v[6]});
    CHECK(std::abs(r.total - (v[0] - 1.5 + v[4] * v[1] + v[5] * v[2] + v[6] * v[3])) < 1e-12);
    CHECK(r.style == v[1]);
    const double base = total_loss(0.5, 2.0, 0.0, 0.0, LossWeights{1, 0, 0}).total - 0.5;
    const double doubled = total_loss(0.5, 2.0, 0.0, 0.0, LossWeights{2, 0, 0}).total - 0.5;
    CHECK(doubled == 2 * base);
  }

  TEST_CASE("non-finite components raise a divergence error carrying the step") {
    try {
      total_loss(1.0, std::nan(""), 0.0, 0.0, LossWeights{}, 42);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.step() == 42);
      CHECK(std::string(e.what()).find("style") != std::string::npos);
    }
    CHECK_THROWS_AS(total_loss(INFINITY, 0, 0, 0, LossWeights{}), DivergenceError);
    CHECK_THROWS(LossWeights{-1, 1, 1}.validate());
  }

  TEST_CASE("style, classification and cycle are non-negative on random inputs") {
    for (std::uint64_t seed = 10; seed < 30; ++seed) {
      const auto a = uniform(24, -5, 5, seed), b = uniform(24, -5, 5, seed + 100);
      CHECK(style_loss(make({3, 8}, a), make({3, 8}, b)).value().item() >= 0.0);
      CHECK(cycle_loss(make({1, 1, 4, 6}, a), make({1, 1, 4, 6}, b), Norm::L2).value().item() >= 0.0);
      CHECK(domain_classification_loss(make({6, 4}, a), {0, 1, 2, 3, 0, 1}).value().item() >= 0.0);
    }
  }

  TEST_CASE("network-level losses have analytic gradients") {
    NetworkConfig cfg;
    cfg.resolution = 16;
    cfg.trunk_blocks = 3;
    for (const auto& c : citgan::testing::loss_gradient_suite(cfg, 12, 3)) {
      INFO(c.loss << " / " << c.network << ": " << c.result.worst);
      CHECK(c.result.max_rel_error < 1e-3);
    }
  }
}
