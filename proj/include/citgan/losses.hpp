#pragma once

#include <string>
#include <vector>

#include "citgan/core/autograd.hpp"
#include "citgan/networks.hpp"

namespace citgan {

/// Distance used by the style and cycle terms.
enum class Norm { L1, L2 };

Norm parse_norm(const std::string& text);
std::string to_string(Norm norm);

struct LossWeights {
  double lambda_style = 1.0;
  double lambda_cls = 1.0;
  double lambda_cycle = 1.0;

  void validate() const;
};

struct LossReport {
  double adv = 0.0;
  double style = 0.0;
  double cls = 0.0;
  double cycle = 0.0;
  double total = 0.0;

  bool operator==(const LossReport&) const = default;
};

// Terms evaluated from network outputs. Index vectors hold one domain per sample.

/// mean log sigmoid(real[n, d_n]) + mean log(1 - sigmoid(fake[n, d'_n])).
Var adversarial_loss(const Var& real_logits, const std::vector<int>& d, const Var& fake_logits,
                     const std::vector<int>& d_prime);
/// Non-saturating generator objective: -mean log sigmoid(fake[n, d'_n]).
Var generator_adversarial_loss(const Var& fake_logits, const std::vector<int>& d_prime);
/// Mean distance between target codes and the codes recovered from generated images.
Var style_loss(const Var& target_codes, const Var& recovered_codes, Norm norm = Norm::L1);
/// Mean cross-entropy of the softmax classifier at the true domains.
Var domain_classification_loss(const Var& class_logits, const std::vector<int>& d);
/// Mean distance between images and their round-trip reconstructions.
Var cycle_loss(const Var& x, const Var& reconstruction, Norm norm = Norm::L1);

// The same terms expressed through the networks.

Var adversarial_loss(const Discriminator& D, const Var& x_real, const std::vector<int>& d, const Var& x_fake,
                     const std::vector<int>& d_prime);
/// ||s' - S_{d'}(G(x, s'))||
Var style_loss(const StylingNetwork& S, const Var& x, const Var& s_prime, const std::vector<int>& d_prime,
               const Generator& G, Norm norm = Norm::L1);
/// -log P(d | x) from S's softmax head.
Var domain_classification_loss(const StylingNetwork& S, const Var& x, const std::vector<int>& d);
/// ||x - G(G(x, s'), s)||
Var cycle_loss(const Generator& G, const Var& x, const Var& s, const Var& s_prime, Norm norm = Norm::L1);

/// Weighted sum of the four components. Throws DivergenceError carrying
/// `step` when any component is non-finite.
LossReport total_loss(double adv, double style, double cls, double cycle, const LossWeights& weights,
                      long step = -1);

}  // namespace citgan
