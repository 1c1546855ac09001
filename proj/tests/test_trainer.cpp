#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "citgan/core/errors.hpp"
#include "citgan/trainer.hpp"
#include "support/tempdir.hpp"

using namespace citgan;
using citgan::testing::TempDir;

namespace {

TrainConfig small_config(long steps) {
  TrainConfig c;
  c.steps = steps;
  c.batch_size = 4;
  c.seed = 9;
  c.log_interval = 5;
  c.checkpoint_interval = 10;
  return c;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_params(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.entries()[i].second.value();
    const auto& y = b.entries()[i].second.value();
    if (!std::equal(x.values().begin(), x.values().end(), y.values().begin(), y.values().end())) return false;
  }
  return true;
}

const std::vector<ImageSample>& toy() {
  static const auto data = generate_toy_domains(1, 20, 32);
  return data;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("zero learning rates leave every parameter unchanged") {
    TrainConfig cfg = small_config(1);
    cfg.lr_gs = 0.0;
    cfg.lr_d = 0.0;
    TrainState state = make_initial_state(cfg, standard_toy_registry());
    const CitGanModel before = state.model.clone();
    const TrainingData data(toy(), standard_toy_registry());
    const TrainBatch batch = sample_batch(state.rng, data, cfg.batch_size);
    const LossReport r = train_step(state, batch, cfg);
    CHECK(std::isfinite(r.total));
    CHECK(state.step == 1);
    CHECK(same_params(before.generator.params(), state.model.generator.params()));
    CHECK(same_params(before.styling.params(), state.model.styling.params()));
    CHECK(same_params(before.discriminator.params(), state.model.discriminator.params()));
  }

  TEST_CASE("discriminator and generator phases never share gradients") {
    const TrainConfig cfg = small_config(1);
    TrainState state = make_initial_state(cfg, standard_toy_registry());
    const TrainingData data(toy(), standard_toy_registry());
    for (int i = 0; i < 3; ++i) {
      StepDiagnostics diag;
      const LossReport r = train_step(state, sample_batch(state.rng, data, cfg.batch_size), cfg, &diag);
      CHECK(diag.d_phase_gs_grad_norm == 0.0);
      CHECK(diag.gs_phase_d_grad_norm == 0.0);
      CHECK(diag.d_objective == doctest::Approx(-r.adv));
    }
  }

  TEST_CASE("reference batches follow the sampled target domains") {
    std::mt19937_64 rng(3);
    const TrainingData data(toy(), standard_toy_registry());
    std::vector<int> seen(3, 0);
    for (int rep = 0; rep < 20; ++rep) {
      const TrainBatch b = sample_batch(rng, data, 8);
      for (std::size_t i = 0; i < 8; ++i) seen[static_cast<std::size_t>(b.d_prime[i])]++;
    }
    for (int k : seen) CHECK(k > 20);
  }

  TEST_CASE("equal seeds give identical loss streams") {
    TempDir a("train"), b("train");
    const TrainConfig cfg = small_config(20);
    const auto ra = train(cfg, toy(), standard_toy_registry(), a.path());
    const auto rb = train(cfg, toy(), standard_toy_registry(), b.path());
    REQUIRE(ra.history.size() == 20);
    CHECK(ra.history == rb.history);
    CHECK(read_file(ra.loss_csv) == read_file(rb.loss_csv));
    TempDir c("train");
    TrainConfig other = cfg;
    other.seed = 10;
    CHECK_FALSE(train(other, toy(), standard_toy_registry(), c.path()).history == ra.history);
  }

  TEST_CASE("resume from a checkpoint matches an uninterrupted run") {
    TempDir full("train"), part("train");
    const TrainConfig cfg = small_config(20);
    const auto uninterrupted = train(cfg, toy(), standard_toy_registry(), full.path());

    TrainConfig first = cfg;
    first.steps = 10;
    train(first, toy(), standard_toy_registry(), part.path());
    TrainOptions opt;
    opt.resume_from = part / "final.ckpt";
    const auto resumed = train(cfg, toy(), standard_toy_registry(), part.path(), opt);
    REQUIRE(resumed.history.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(resumed.history[i] == uninterrupted.history[10 + i]);
    CHECK(resumed.history.back().total == uninterrupted.history.back().total);

    const TrainState a = load_checkpoint(full / "final.ckpt");
    const TrainState b = load_checkpoint(part / "final.ckpt");
    CHECK(same_params(a.model.generator.params(), b.model.generator.params()));
    CHECK(same_params(a.model.discriminator.params(), b.model.discriminator.params()));
    CHECK(a.rng == b.rng);
    CHECK(read_file(full / "losses.csv") == read_file(part / "losses.csv"));
  }

  TEST_CASE("resume under a different trajectory config is refused") {
    TempDir dir("train");
    TrainConfig cfg = small_config(2);
    train(cfg, toy(), standard_toy_registry(), dir.path());
    cfg.steps = 4;
    cfg.lr_d = 2e-4;
    TrainOptions opt;
    opt.resume_from = dir / "final.ckpt";
    CHECK_THROWS_AS(train(cfg, toy(), standard_toy_registry(), dir.path(), opt), ConfigError);
  }

  TEST_CASE("steps = 0 writes the initial checkpoint and an empty loss log") {
    TempDir dir("train");
    const auto r = train(small_config(0), toy(), standard_toy_registry(), dir.path());
    CHECK(r.history.empty());
    CHECK(std::filesystem::exists(r.final_checkpoint));
    CHECK(read_file(r.loss_csv) == loss_csv_header() + "\n");
    CHECK(load_checkpoint(r.final_checkpoint).step == 0);
  }

  TEST_CASE("a domain without training samples is named before step 0") {
    TempDir dir("train");
    auto data = toy();
    for (auto& s : data)
      if (s.domain == 1) s.split = Split::Test;
    try {
      train(small_config(5), data, standard_toy_registry(), dir.path());
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("checker") != std::string::npos);
    }
    CHECK_FALSE(std::filesystem::exists(dir / "final.ckpt"));
  }

  TEST_CASE("invalid training configs are rejected") {
    TempDir dir("train");
    for (double lr : {0.0, 1.0, -1e-3}) {
      TrainConfig cfg = small_config(1);
      cfg.lr_gs = lr;
      CHECK_THROWS_AS(train(cfg, toy(), standard_toy_registry(), dir.path()), ConfigError);
    }
    TrainConfig cfg = small_config(1);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(cfg, toy(), standard_toy_registry(), dir.path()), ConfigError);
  }

  TEST_CASE("periodic checkpoints and interval-mean loss rows") {
    TempDir dir("train");
    const auto r = train(small_config(20), toy(), standard_toy_registry(), dir.path());
    CHECK(std::filesystem::exists(dir / "step_000010.ckpt"));
    CHECK(std::filesystem::exists(dir / "step_000020.ckpt"));
    std::ifstream in(r.loss_csv);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "step,adv,style,cls,cycle,total");
    double first_cycle = 0;
    while (std::getline(in, line)) {
      if (rows == 0) {
        std::stringstream ss(line);
        std::string f;
        for (int i = 0; i < 5; ++i) std::getline(ss, f, ',');
        first_cycle = std::stod(f);
      }
      ++rows;
    }
    CHECK(rows == 4);
    double mean = 0;
    for (int i = 0; i < 5; ++i) mean += r.history[static_cast<std::size_t>(i)].cycle / 5;
    CHECK(first_cycle == doctest::Approx(mean).epsilon(1e-8));
  }
}
