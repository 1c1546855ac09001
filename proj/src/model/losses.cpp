#include "citgan/losses.hpp"

#include <cmath>
#include <sstream>

#include "citgan/core/errors.hpp"
#include "citgan/core/ops.hpp"

namespace citgan {

namespace {

Var distance(const Var& a, const Var& b, Norm norm) {
  Var diff = ops::sub(a, b);
  return ops::mean(norm == Norm::L1 ? ops::abs(diff) : ops::square(diff));
}

}  // namespace

Norm parse_norm(const std::string& text) {
  if (text == "l1" || text == "L1") return Norm::L1;
  if (text == "l2" || text == "L2") return Norm::L2;
  throw ConfigError("unknown norm '" + text + "' (expected l1 or l2)");
}

std::string to_string(Norm norm) { return norm == Norm::L1 ? "l1" : "l2"; }

void LossWeights::validate() const {
  for (double w : {lambda_style, lambda_cls, lambda_cycle})
    CITGAN_REQUIRE(std::isfinite(w) && w >= 0.0, "loss weights must be finite and non-negative");
}

Var adversarial_loss(const Var& real_logits, const std::vector<int>& d, const Var& fake_logits,
                     const std::vector<int>& d_prime) {
  // log sigmoid(z) = -softplus(-z);  log(1 - sigmoid(z)) = -softplus(z)
  Var real_term = ops::mean(ops::softplus(ops::scale(ops::pick(real_logits, d), -1.0)));
  Var fake_term = ops::mean(ops::softplus(ops::pick(fake_logits, d_prime)));
  return ops::scale(ops::add(real_term, fake_term), -1.0);
}

Var generator_adversarial_loss(const Var& fake_logits, const std::vector<int>& d_prime) {
  return ops::mean(ops::softplus(ops::scale(ops::pick(fake_logits, d_prime), -1.0)));
}

Var style_loss(const Var& target_codes, const Var& recovered_codes, Norm norm) {
  CITGAN_REQUIRE(target_codes.value().same_shape(recovered_codes.value()),
                 "style_loss: style code shapes differ: " + target_codes.value().shape_string() + " vs " +
                     recovered_codes.value().shape_string());
  return distance(target_codes, recovered_codes, norm);
}

Var domain_classification_loss(const Var& class_logits, const std::vector<int>& d) {
  return ops::scale(ops::mean(ops::pick(ops::log_softmax(class_logits), d)), -1.0);
}

Var cycle_loss(const Var& x, const Var& reconstruction, Norm norm) {
  CITGAN_REQUIRE(x.value().same_shape(reconstruction.value()),
                 "cycle_loss: shape mismatch " + x.value().shape_string() + " vs " +
                     reconstruction.value().shape_string());
  return distance(x, reconstruction, norm);
}

Var adversarial_loss(const Discriminator& D, const Var& x_real, const std::vector<int>& d, const Var& x_fake,
                     const std::vector<int>& d_prime) {
  return adversarial_loss(D.forward(x_real), d, D.forward(x_fake), d_prime);
}

Var style_loss(const StylingNetwork& S, const Var& x, const Var& s_prime, const std::vector<int>& d_prime,
               const Generator& G, Norm norm) {
  CITGAN_REQUIRE(s_prime.value().rank() == 2 && s_prime.value().dim(1) == S.config().style_dim,
                 "style_loss: style code width does not match style_dim " + std::to_string(S.config().style_dim));
  return style_loss(s_prime, S.style_for(G.forward(x, s_prime), d_prime), norm);
}

Var domain_classification_loss(const StylingNetwork& S, const Var& x, const std::vector<int>& d) {
  return domain_classification_loss(S.forward(x).logits, d);
}

Var cycle_loss(const Generator& G, const Var& x, const Var& s, const Var& s_prime, Norm norm) {
  return cycle_loss(x, G.forward(G.forward(x, s_prime), s), norm);
}

LossReport total_loss(double adv, double style, double cls, double cycle, const LossWeights& weights, long step) {
  LossReport r{adv, style, cls, cycle, 0.0};
  if (!std::isfinite(adv) || !std::isfinite(style) || !std::isfinite(cls) || !std::isfinite(cycle)) {
    std::ostringstream os;
    os << "non-finite loss component (adv=" << adv << ", style=" << style << ", cls=" << cls << ", cycle=" << cycle
       << ")";
    throw DivergenceError(step, os.str());
  }
  r.total = adv + weights.lambda_style * style + weights.lambda_cls * cls + weights.lambda_cycle * cycle;
  return r;
}

}  // namespace citgan
