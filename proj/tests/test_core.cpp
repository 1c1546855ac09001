#include <doctest.h>

#include <cmath>
#include <random>

#include "citgan/core/adam.hpp"
#include "citgan/core/errors.hpp"
#include "citgan/core/ops.hpp"
#include "citgan/core/parameters.hpp"
#include "support/gradcheck.hpp"

using namespace citgan;
using citgan::testing::check_gradients;

namespace {

Var random_leaf(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return Var::leaf(std::move(t), true);
}

// Weighted sum so every output entry gets a distinct upstream gradient.
Var probe(const Var& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor w(y.shape());
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : w.values()) v = n(rng);
  return ops::sum(ops::mul(y, Var::constant(std::move(w))));
}

void require_ok(const testing::GradCheck& g, double tol = 1e-6) {
  INFO(g.worst);
  CHECK(g.checked > 0);
  CHECK(g.max_rel_error < tol);
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("tensor shape and indexing") {
    Tensor t({2, 3, 4, 5}, 1.5);
    CHECK(t.size() == 120);
    CHECK(t.rank() == 4);
    t.at(1, 2, 3, 4) = 7.0;
    CHECK(t[119] == 7.0);
    CHECK(shape_string(t.shape()) == "[2,3,4,5]");
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ContractViolation);
    CHECK(t.reshaped({6, 20}).dim(1) == 20);
  }

  TEST_CASE("elementwise op gradients") {
    std::mt19937_64 rng(1);
    Var a = random_leaf({2, 3, 4}, rng), b = random_leaf({2, 3, 4}, rng, 0.5, 1.5);
    std::vector<std::pair<std::string, Var>> leaves{{"a", a}, {"b", b}};
    require_ok(check_gradients(leaves, [&] { return probe(ops::add(a, b), 2); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return probe(ops::sub(a, b), 2); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return probe(ops::mul(a, b), 2); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return probe(ops::square(ops::scale(a, 1.7)), 2); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return probe(ops::tanh(ops::add_scalar(a, 0.3)), 2); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return probe(ops::softplus(ops::scale(a, 3.0)), 2); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return ops::mean(ops::abs(b)); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return probe(ops::leaky_relu(b, 0.2), 2); }, 30, 3));
    require_ok(check_gradients(leaves, [&] { return probe(ops::reshape(a, {6, 4}), 2); }, 30, 3));
  }

  TEST_CASE("softmax family gradients") {
    std::mt19937_64 rng(4);
    Var x = random_leaf({4, 5}, rng, -3, 3);
    std::vector<std::pair<std::string, Var>> leaves{{"x", x}};
    require_ok(check_gradients(leaves, [&] { return probe(ops::log_softmax(x), 5); }, 20, 6));
    require_ok(check_gradients(leaves, [&] { return probe(ops::softmax(x), 5); }, 20, 6));
    require_ok(check_gradients(leaves, [&] { return probe(ops::pick(x, {0, 4, 2, 2}), 5); }, 20, 6));
    Var s = ops::softmax(x);
    for (int n = 0; n < 4; ++n) {
      double total = 0;
      for (int k = 0; k < 5; ++k) total += s.value()[n * 5 + k];
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("linear, conv, pooling and normalization gradients") {
    std::mt19937_64 rng(7);
    Var x = random_leaf({2, 3, 6, 6}, rng);
    Var w = random_leaf({4, 3, 3, 3}, rng), b = random_leaf({4}, rng);
    std::vector<std::pair<std::string, Var>> leaves{{"x", x}, {"w", w}, {"b", b}};
    require_ok(check_gradients(leaves, [&] { return probe(ops::conv2d(x, w, b, 1, 1), 8); }, 40, 9));
    require_ok(check_gradients(leaves, [&] { return probe(ops::conv2d(x, w, b, 2, 1), 8); }, 40, 9));
    require_ok(check_gradients(leaves, [&] { return probe(ops::upsample_nearest2x(x), 8); }, 20, 9));
    require_ok(check_gradients(leaves, [&] { return probe(ops::instance_norm(x), 8); }, 30, 9));
    require_ok(check_gradients(leaves, [&] { return probe(ops::global_avg_pool(x), 8); }, 20, 9));

    Var g = random_leaf({2, 3}, rng), sh = random_leaf({2, 3}, rng);
    std::vector<std::pair<std::string, Var>> mod{{"x", x}, {"gain", g}, {"shift", sh}};
    require_ok(check_gradients(mod, [&] { return probe(ops::modulate(x, g, sh), 8); }, 30, 9));

    Var f = random_leaf({3, 5}, rng), lw = random_leaf({2, 5}, rng), lb = random_leaf({2}, rng);
    std::vector<std::pair<std::string, Var>> lin{{"f", f}, {"w", lw}, {"b", lb}};
    require_ok(check_gradients(lin, [&] { return probe(ops::linear(f, lw, lb), 8); }, 30, 9));

    Var codes = random_leaf({3, 4, 2}, rng);
    std::vector<std::pair<std::string, Var>> pr{{"codes", codes}};
    require_ok(check_gradients(pr, [&] { return probe(ops::pick_rows(codes, {3, 0, 1}), 8); }, 20, 9));
  }

  TEST_CASE("conv2d matches direct summation") {
    std::mt19937_64 rng(11);
    Var x = random_leaf({1, 2, 5, 5}, rng), w = random_leaf({3, 2, 3, 3}, rng), b = random_leaf({3}, rng);
    const Tensor y = ops::conv2d(x, w, b, 2, 1).value();
    REQUIRE(y.shape() == std::vector<int>{1, 3, 3, 3});
    for (int o = 0; o < 3; ++o)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double acc = b.value()[o];
          for (int c = 0; c < 2; ++c)
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const int r = i * 2 - 1 + ki, q = j * 2 - 1 + kj;
                if (r < 0 || q < 0 || r >= 5 || q >= 5) continue;
                acc += w.value().at(o, c, ki, kj) * x.value().at(0, c, r, q);
              }
          CHECK(y.at(0, o, i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
  }

  TEST_CASE("softplus stays finite for large inputs") {
    Var a = Var::leaf(Tensor({3}, std::vector<double>{-800.0, 0.0, 800.0}), true);
    Var y = ops::softplus(a);
    CHECK(y.value()[0] == doctest::Approx(0.0));
    CHECK(y.value()[1] == doctest::Approx(std::log(2.0)));
    CHECK(y.value()[2] == doctest::Approx(800.0));
    ops::sum(y).backward();
    CHECK(a.grad()[0] == doctest::Approx(0.0));
    CHECK(a.grad()[1] == doctest::Approx(0.5));
    CHECK(a.grad()[2] == doctest::Approx(1.0));
  }

  TEST_CASE("no-grad guard stops recording") {
    Var a = Var::leaf(Tensor({2}, 1.0), true);
    {
      NoGradGuard ng;
      Var y = ops::scale(a, 2.0);
      CHECK_FALSE(y.requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(ops::scale(a, 2.0).requires_grad());
  }

  TEST_CASE("backward requires a scalar") {
    Var a = Var::leaf(Tensor({3}, 1.0), true);
    CHECK_THROWS_AS(ops::scale(a, 2.0).backward(), ContractViolation);
  }

  TEST_CASE("adam first step moves by lr against the gradient sign") {
    ParameterSet p;
    p.add("w", Tensor({3}, std::vector<double>{1.0, -2.0, 0.5}));
    Adam opt(p, AdamConfig{0.1, 0.5, 0.999, 1e-8});
    Var loss = ops::sum(ops::square(p.get("w")));
    loss.backward();
    opt.step(p);
    const auto& w = p.get("w").value();
    // bias-corrected first step is lr * g / (|g| + eps)
    CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(w[1] == doctest::Approx(-1.9).epsilon(1e-7));
    CHECK(w[2] == doctest::Approx(0.4).epsilon(1e-7));
    CHECK(opt.steps_taken() == 1);
  }

  TEST_CASE("fan-in init has the requested spread") {
    std::mt19937_64 rng(5);
    const Tensor t = fan_in_normal({64, 32, 3, 3}, 32 * 9, 2.0, rng);
    double ss = 0;
    for (double v : t.values()) ss += v * v;
    CHECK(std::sqrt(ss / t.size()) == doctest::Approx(std::sqrt(2.0 / 288)).epsilon(0.03));
  }
}
