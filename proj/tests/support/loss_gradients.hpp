#pragma once

#include <random>
#include <string>
#include <vector>

#include "citgan/losses.hpp"
#include "support/gradcheck.hpp"

namespace citgan::testing {

struct LossGradCase {
  std::string loss;
  std::string network;
  GradCheck result;
};

// Finite-difference checks of every loss with respect to every network it
// depends on, on a fresh model at the given config.
inline std::vector<LossGradCase> loss_gradient_suite(const NetworkConfig& cfg, int samples, std::uint64_t seed,
                                                     int batch = 2) {
  CitGanModel m(cfg, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto images = [&] {
    Tensor t({batch, cfg.channels, cfg.resolution, cfg.resolution});
    for (auto& v : t.values()) v = u(rng);
    return Var::constant(std::move(t));
  };
  const Var x = images(), y = images();
  std::vector<int> d, dp;
  for (int i = 0; i < batch; ++i) {
    d.push_back(i % cfg.num_domains);
    dp.push_back((i + 1) % cfg.num_domains);
  }
  const Generator& G = m.generator;
  const StylingNetwork& S = m.styling;
  const Discriminator& D = m.discriminator;

  auto adv = [&] { return adversarial_loss(D, x, d, G.forward(x, S.style_for(y, dp)), dp); };
  auto style = [&] { return style_loss(S, x, S.style_for(y, dp), dp, G); };
  auto cls = [&] { return domain_classification_loss(S, x, d); };
  auto cycle = [&] { return cycle_loss(G, x, S.style_for(x, d), S.style_for(y, dp)); };

  std::vector<LossGradCase> out;
  std::uint64_t k = seed * 101;
  auto run = [&](const char* loss, const char* net, ParameterSet& params, const std::function<Var()>& f) {
    out.push_back({loss, net, check_gradients(params, f, samples, ++k)});
  };
  run("adversarial", "discriminator", m.discriminator.params(), adv);
  run("adversarial", "generator", m.generator.params(), adv);
  run("adversarial", "styling", m.styling.params(), adv);
  run("style", "generator", m.generator.params(), style);
  run("style", "styling", m.styling.params(), style);
  run("classification", "styling", m.styling.params(), cls);
  run("cycle", "generator", m.generator.params(), cycle);
  run("cycle", "styling", m.styling.params(), cycle);
  return out;
}

}  // namespace citgan::testing
