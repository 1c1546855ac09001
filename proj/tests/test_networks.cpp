#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "citgan/checkpoint.hpp"
#include "citgan/core/errors.hpp"
#include "citgan/core/ops.hpp"
#include "citgan/networks.hpp"
#include "support/gradcheck.hpp"
#include "support/tempdir.hpp"

using namespace citgan;
using citgan::testing::check_gradients;
using citgan::testing::TempDir;

namespace {

Var random_images(int n, const NetworkConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({n, cfg.channels, cfg.resolution, cfg.resolution});
  for (auto& v : t.values()) v = u(rng);
  return Var::constant(std::move(t));
}

Var random_style(int n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor t({n, dim});
  for (auto& v : t.values()) v = g(rng);
  return Var::constant(std::move(t));
}

bool all_finite(const Tensor& t) {
  for (double v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TEST_SUITE("networks") {
  TEST_CASE("generator shape, range and purity") {
    const NetworkConfig cfg;
    const CitGanModel m(cfg, 1);
    const Var x = random_images(2, cfg, 2), s = random_style(2, cfg.style_dim, 3);
    const Tensor y = m.generator.forward(x, s).value();
    CHECK(y.shape() == x.shape());
    for (double v : y.values()) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
    CHECK(m.generator.forward(x, s).value().values().size() == y.size());
    const Tensor y2 = m.generator.forward(x, s).value();
    CHECK(std::equal(y.values().begin(), y.values().end(), y2.values().begin()));
  }

  TEST_CASE("perturbing one style entry changes the generator output") {
    const NetworkConfig cfg;
    const CitGanModel m(cfg, 4);
    const Var x = random_images(1, cfg, 5);
    Tensor s = random_style(1, cfg.style_dim, 6).value();
    const Tensor y0 = m.generator.forward(x, Var::constant(s)).value();
    s[3] += 0.5;
    const Tensor y1 = m.generator.forward(x, Var::constant(s)).value();
    double delta = 0;
    for (std::size_t i = 0; i < y0.size(); ++i) delta += std::abs(y0[i] - y1[i]);
    CHECK(delta > 1e-6);
  }

  TEST_CASE("styling network: codes per domain and a probability vector") {
    const NetworkConfig cfg;
    const CitGanModel m(cfg, 7);
    CHECK(m.styling.num_style_heads() == 3);
    CHECK(m.discriminator.num_branches() == 3);
    const auto out = m.styling.forward(random_images(4, cfg, 8));
    CHECK(out.codes.shape() == std::vector<int>{4, 3, cfg.style_dim});
    CHECK(out.probs.shape() == std::vector<int>{4, 3});
    for (int n = 0; n < 4; ++n) {
      double total = 0;
      for (int k = 0; k < 3; ++k) {
        const double p = out.probs.value()[static_cast<std::size_t>(n * 3 + k)];
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
    CHECK(all_finite(out.codes.value()));
    const Var picked = m.styling.style_for(random_images(4, cfg, 8), {2, 0, 1, 1});
    CHECK(picked.shape() == std::vector<int>{4, cfg.style_dim});
    CHECK(picked.value()[0] == out.codes.value()[2 * cfg.style_dim]);
  }

  TEST_CASE("discriminator emits one finite logit per domain") {
    const NetworkConfig cfg;
    const CitGanModel m(cfg, 9);
    const Var x = random_images(3, cfg, 10);
    const Tensor l = m.discriminator.forward(x).value();
    CHECK(l.shape() == std::vector<int>{3, 3});
    CHECK(all_finite(l));
    const Tensor l2 = m.discriminator.forward(x).value();
    CHECK(std::equal(l.values().begin(), l.values().end(), l2.values().begin()));
  }

  TEST_CASE("shape mismatches are contract violations") {
    const NetworkConfig cfg;
    const CitGanModel m(cfg, 11);
    NetworkConfig other = cfg;
    other.resolution = 16;
    const Var small = random_images(1, other, 1);
    CHECK_THROWS_AS(m.generator.forward(small, random_style(1, cfg.style_dim, 1)), ContractViolation);
    CHECK_THROWS_AS(m.generator.forward(random_images(1, cfg, 1), random_style(1, 8, 1)), ContractViolation);
    CHECK_THROWS_AS(m.styling.forward(small), ContractViolation);
    CHECK_THROWS_AS(m.discriminator.forward(small), ContractViolation);
  }

  TEST_CASE("head and branch counts must match the domain count") {
    NetworkConfig cfg;
    std::mt19937_64 rng(1);
    NetworkConfig four = cfg;
    four.num_domains = 4;
    Generator g(cfg, rng);
    StylingNetwork s(four, rng);
    Discriminator d(cfg, rng);
    CHECK_THROWS_AS(CitGanModel(cfg, std::move(g), std::move(s), std::move(d)), ContractViolation);
  }

  TEST_CASE("outputs stay finite on extreme inputs") {
    const NetworkConfig cfg;
    const CitGanModel m(cfg, 12);
    const Var ones = Var::constant(Tensor({1, 1, 32, 32}, 1.0));
    const Var neg = Var::constant(Tensor({1, 1, 32, 32}, -1.0));
    for (const Var& x : {ones, neg}) {
      CHECK(all_finite(m.generator.forward(x, random_style(1, cfg.style_dim, 2)).value()));
      CHECK(all_finite(m.styling.forward(x).probs.value()));
      CHECK(all_finite(m.discriminator.forward(x).value()));
    }
  }

  TEST_CASE("finite-difference checks of the styling softmax and the discriminator") {
    const NetworkConfig cfg;
    CitGanModel m(cfg, 13);
    const Var x = random_images(2, cfg, 14);
    {
      std::vector<std::pair<std::string, Var>> trunk;
      for (auto& e : m.styling.params().entries())
        if (e.first.rfind("trunk.", 0) == 0) trunk.push_back(e);
      const auto g = check_gradients(trunk, [&] { return ops::sum(ops::pick(m.styling.forward(x).probs, {1, 2})); },
                                     30, 15);
      INFO(g.worst);
      CHECK(g.max_rel_error < 1e-3);
    }
    {
      const auto g = check_gradients(m.discriminator.params(),
                                     [&] { return ops::sum(ops::pick(m.discriminator.forward(x), {0, 2})); }, 30, 16);
      INFO(g.worst);
      CHECK(g.max_rel_error < 1e-3);
    }
  }

  TEST_CASE("checkpoint round-trip reproduces the generator exactly") {
    TempDir dir("ckpt");
    const NetworkConfig cfg;
    TrainState state(CitGanModel(cfg, 21), DomainRegistry({"a", "b", "c"}), AdamConfig{}, AdamConfig{}, 5);
    state.step = 17;
    save_checkpoint(dir / "m.ckpt", state, "cafe");
    std::string hash;
    const TrainState loaded = load_checkpoint(dir / "m.ckpt", &hash);
    CHECK(hash == "cafe");
    CHECK(loaded.step == 17);
    CHECK(loaded.registry == state.registry);
    CHECK(loaded.rng == state.rng);
    const Var x = random_images(2, cfg, 22), s = random_style(2, cfg.style_dim, 23);
    const Tensor a = state.model.generator.forward(x, s).value();
    const Tensor b = loaded.model.generator.forward(x, s).value();
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    const LoadedModel lm = load_model(dir / "m.ckpt");
    CHECK(lm.model.config == cfg);
  }

  TEST_CASE("checkpoint from a newer format version names both versions") {
    TempDir dir("ckpt");
    TrainState state(CitGanModel(NetworkConfig{}, 1), DomainRegistry({"a", "b", "c"}), AdamConfig{}, AdamConfig{}, 1);
    save_checkpoint(dir / "m.ckpt", state, "x");
    {
      std::fstream f(dir / "m.ckpt", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(8);
      const std::uint32_t newer = kCheckpointVersion + 1;
      f.write(reinterpret_cast<const char*>(&newer), sizeof newer);
    }
    try {
      load_checkpoint(dir / "m.ckpt");
      FAIL("expected a version error");
    } catch (const CheckpointError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("version " + std::to_string(kCheckpointVersion + 1)) != std::string::npos);
      CHECK(msg.find("version " + std::to_string(kCheckpointVersion)) != std::string::npos);
    }
  }

  TEST_CASE("corrupt and truncated checkpoints are rejected") {
    TempDir dir("ckpt");
    TrainState state(CitGanModel(NetworkConfig{}, 1), DomainRegistry({"a", "b", "c"}), AdamConfig{}, AdamConfig{}, 1);
    save_checkpoint(dir / "m.ckpt", state, "x");
    const auto size = std::filesystem::file_size(dir / "m.ckpt");
    {
      std::fstream f(dir / "m.ckpt", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(static_cast<std::streamoff>(size / 2));
      f.put('\x7f');
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt"), CheckpointError);
    std::filesystem::resize_file(dir / "m.ckpt", size / 3);
    CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt"), CheckpointError);
    std::ofstream(dir / "junk.ckpt") << "hello";
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), CheckpointError);
  }
}
