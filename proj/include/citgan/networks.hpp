#pragma once

#include <random>
#include <string>
#include <vector>

#include "citgan/core/autograd.hpp"
#include "citgan/core/parameters.hpp"

namespace citgan {

/// Architecture hyperparameters shared by G, S and D.
struct NetworkConfig {
  int resolution = 32;
  int channels = 1;
  int style_dim = 16;
  int base_width = 16;
  int max_width = 64;
  int num_domains = 3;
  int generator_blocks = 3;  // down blocks, mirrored by up blocks
  int trunk_blocks = 4;      // stride-2 blocks in S, D and classifiers
  double leaky_slope = 0.2;

  /// Channel width after `level` halvings.
  int width(int level) const;
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

/// Throws ContractViolation unless x is [N, channels, resolution, resolution].
void require_image_batch(const Var& x, const NetworkConfig& config, const char* op);

/// Encoder-decoder translator. Each decoder block normalizes its activations
/// and re-scales/shifts them with per-channel affine maps of the style code.
class Generator {
 public:
  Generator(const NetworkConfig& config, std::mt19937_64& rng);
  Generator(NetworkConfig config, ParameterSet params);

  /// x: [N,C,R,R] in [-1,1]; style: [N,style_dim]. Output has x's shape, in [-1,1].
  Var forward(const Var& x, const Var& style) const;

  const NetworkConfig& config() const noexcept { return config_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  Generator clone() const { return Generator(config_, params_.clone()); }

 private:
  NetworkConfig config_;
  ParameterSet params_;
};

struct StylingOutput {
  Var codes;   // [N, num_domains, style_dim]; codes[n, d] is the domain-d style of sample n
  Var logits;  // [N, num_domains]
  Var probs;   // softmax(logits)
};

/// Multi-task encoder: shared trunk, one style head per domain and a softmax
/// domain classifier on the shared features.
class StylingNetwork {
 public:
  StylingNetwork(const NetworkConfig& config, std::mt19937_64& rng);
  StylingNetwork(NetworkConfig config, ParameterSet params);

  StylingOutput forward(const Var& x) const;
  /// Style codes of each sample for the requested domain: [N, style_dim].
  Var style_for(const Var& x, const std::vector<int>& domains) const;

  int num_style_heads() const noexcept { return config_.num_domains; }
  const NetworkConfig& config() const noexcept { return config_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  StylingNetwork clone() const { return StylingNetwork(config_, params_.clone()); }

 private:
  NetworkConfig config_;
  ParameterSet params_;
};

/// Shared trunk with one real/synthetic logit per domain.
class Discriminator {
 public:
  Discriminator(const NetworkConfig& config, std::mt19937_64& rng);
  Discriminator(NetworkConfig config, ParameterSet params);

  /// [N, num_domains] logits; sigmoid(logit[n,d]) = P(sample n is a real member of d).
  Var forward(const Var& x) const;

  int num_branches() const noexcept { return config_.num_domains; }
  const NetworkConfig& config() const noexcept { return config_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  Discriminator clone() const { return Discriminator(config_, params_.clone()); }

 private:
  NetworkConfig config_;
  ParameterSet params_;
};

/// Plain CNN classifier with the S/D trunk and `outputs` logits. Used for PAD
/// scoring (one logit) and as the domain classifier / FID feature extractor.
class ConvClassifier {
 public:
  ConvClassifier(const NetworkConfig& config, int outputs, std::mt19937_64& rng);
  ConvClassifier(NetworkConfig config, int outputs, ParameterSet params);

  /// Globally pooled trunk activations, [N, feature_dim()].
  Var features(const Var& x) const;
  Var logits(const Var& x) const;

  int outputs() const noexcept { return outputs_; }
  int feature_dim() const noexcept;
  const NetworkConfig& config() const noexcept { return config_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  NetworkConfig config_;
  int outputs_;
  ParameterSet params_;
};

/// The three translation networks built from one config and seed.
struct CitGanModel {
  NetworkConfig config;
  Generator generator;
  StylingNetwork styling;
  Discriminator discriminator;

  CitGanModel(const NetworkConfig& cfg, std::uint64_t seed);
  CitGanModel(NetworkConfig cfg, Generator g, StylingNetwork s, Discriminator d);
  CitGanModel clone() const;
};

}  // namespace citgan
