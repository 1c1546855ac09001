#include "citgan/core/adam.hpp"

#include <cmath>

#include "citgan/core/errors.hpp"

namespace citgan {

Adam::Adam(const ParameterSet& params, AdamConfig config) : config_(config) {
  for (const auto& [name, var] : params.entries()) {
    names_.push_back(name);
    m_.push_back(Tensor::zeros_like(var.value()));
    v_.push_back(Tensor::zeros_like(var.value()));
  }
}

void Adam::step(ParameterSet& params) {
  CITGAN_REQUIRE(params.size() == names_.size(), "optimizer built for a different parameter set");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  std::size_t k = 0;
  for (auto& [name, var] : params.entries()) {
    CITGAN_REQUIRE(name == names_[k], "optimizer parameter order mismatch at " + name);
    if (var.has_grad()) {
      Tensor& w = var.mutable_value();
      const Tensor& g = var.grad();
      Tensor& m = m_[k];
      Tensor& v = v_[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        w[i] -= config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
      }
    }
    ++k;
  }
}

}  // namespace citgan
