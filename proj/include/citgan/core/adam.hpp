#pragma once

#include <string>
#include <vector>

#include "citgan/core/parameters.hpp"

namespace citgan {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive moment estimation over one ParameterSet. Moments are stored in
/// parameter order and addressed by name for checkpointing.
class Adam {
 public:
  Adam() = default;
  Adam(const ParameterSet& params, AdamConfig config);

  void step(ParameterSet& params);

  const AdamConfig& config() const noexcept { return config_; }
  AdamConfig& config() noexcept { return config_; }
  long steps_taken() const noexcept { return t_; }
  void set_steps_taken(long t) noexcept { t_ = t; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<Tensor>& first_moments() noexcept { return m_; }
  std::vector<Tensor>& second_moments() noexcept { return v_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::vector<std::string> names_;
  std::vector<Tensor> m_, v_;
};

}  // namespace citgan
