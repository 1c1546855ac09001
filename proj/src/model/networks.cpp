#include "citgan/networks.hpp"

#include <algorithm>

#include "citgan/core/errors.hpp"
#include "citgan/core/ops.hpp"

namespace citgan {

namespace {

std::string key(const std::string& prefix, const std::string& name) { return prefix + "." + name; }

void add_conv(ParameterSet& p, const std::string& name, int in, int out, int kernel, std::mt19937_64& rng) {
  p.add(key(name, "weight"), fan_in_normal({out, in, kernel, kernel}, in * kernel * kernel, 2.0, rng));
  p.add(key(name, "bias"), Tensor({out}));
}

void add_linear(ParameterSet& p, const std::string& name, int in, int out, double bias_fill,
                std::mt19937_64& rng) {
  p.add(key(name, "weight"), fan_in_normal({out, in}, in, 1.0, rng));
  p.add(key(name, "bias"), Tensor({out}, bias_fill));
}

Var conv(const ParameterSet& p, const std::string& name, const Var& x, int stride) {
  const Var& w = p.get(key(name, "weight"));
  return ops::conv2d(x, w, p.get(key(name, "bias")), stride, w.value().dim(2) / 2);
}

Var linear(const ParameterSet& p, const std::string& name, const Var& x) {
  return ops::linear(x, p.get(key(name, "weight")), p.get(key(name, "bias")));
}

// Stem conv at full resolution followed by stride-2 blocks, then global pooling.
void add_trunk(ParameterSet& p, const NetworkConfig& c, std::mt19937_64& rng) {
  add_conv(p, "trunk.stem", c.channels, c.width(0), 3, rng);
  for (int i = 1; i <= c.trunk_blocks; ++i)
    add_conv(p, "trunk.block" + std::to_string(i), c.width(i - 1), c.width(i), 3, rng);
}

Var trunk_forward(const ParameterSet& p, const NetworkConfig& c, const Var& x) {
  Var h = ops::leaky_relu(conv(p, "trunk.stem", x, 1), c.leaky_slope);
  for (int i = 1; i <= c.trunk_blocks; ++i)
    h = ops::leaky_relu(conv(p, "trunk.block" + std::to_string(i), h, 2), c.leaky_slope);
  return ops::global_avg_pool(h);
}

void require_style(const Var& s, int batch, const NetworkConfig& c) {
  const std::vector<int> expected{batch, c.style_dim};
  CITGAN_REQUIRE(s.value().shape() == expected, "generator_forward: style code shape " + s.value().shape_string() +
                                                    ", expected " + shape_string(expected));
}

}  // namespace

int NetworkConfig::width(int level) const {
  long w = base_width;
  for (int i = 0; i < level && w < max_width; ++i) w *= 2;
  return static_cast<int>(std::min<long>(w, max_width));
}

void NetworkConfig::validate() const {
  CITGAN_REQUIRE(channels >= 1 && style_dim >= 1 && base_width >= 1 && max_width >= base_width,
                 "network config: widths and style_dim must be positive");
  CITGAN_REQUIRE(num_domains >= 1, "network config: need at least one domain");
  CITGAN_REQUIRE(generator_blocks >= 1 && trunk_blocks >= 1, "network config: block counts must be positive");
  const int levels = std::max(generator_blocks, trunk_blocks);
  CITGAN_REQUIRE(resolution >= (1 << levels) && resolution % (1 << levels) == 0,
                 "network config: resolution " + std::to_string(resolution) + " must be a multiple of " +
                     std::to_string(1 << levels));
}

void require_image_batch(const Var& x, const NetworkConfig& c, const char* op) {
  const auto& s = x.value().shape();
  const bool ok = s.size() == 4 && s[0] >= 1 && s[1] == c.channels && s[2] == c.resolution && s[3] == c.resolution;
  CITGAN_REQUIRE(ok, std::string(op) + ": input shape " + x.value().shape_string() + " does not match [N," +
                         std::to_string(c.channels) + "," + std::to_string(c.resolution) + "," +
                         std::to_string(c.resolution) + "]");
}

// ---------------------------------------------------------------------------

Generator::Generator(const NetworkConfig& config, std::mt19937_64& rng) : config_(config) {
  config_.validate();
  const auto& c = config_;
  add_conv(params_, "enc.stem", c.channels, c.width(0), 3, rng);
  for (int i = 1; i <= c.generator_blocks; ++i)
    add_conv(params_, "enc.down" + std::to_string(i), c.width(i - 1), c.width(i), 3, rng);
  for (int i = c.generator_blocks; i >= 1; --i) {
    const std::string b = "dec.up" + std::to_string(i);
    add_conv(params_, b + ".conv", c.width(i), c.width(i - 1), 3, rng);
    add_linear(params_, b + ".gain", c.style_dim, c.width(i - 1), 1.0, rng);
    add_linear(params_, b + ".shift", c.style_dim, c.width(i - 1), 0.0, rng);
  }
  add_conv(params_, "dec.out", c.width(0), c.channels, 3, rng);
}

Generator::Generator(NetworkConfig config, ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
}

Var Generator::forward(const Var& x, const Var& style) const {
  require_image_batch(x, config_, "generator_forward");
  require_style(style, x.value().dim(0), config_);
  const auto& c = config_;
  Var h = ops::leaky_relu(conv(params_, "enc.stem", x, 1), c.leaky_slope);
  for (int i = 1; i <= c.generator_blocks; ++i) {
    h = conv(params_, "enc.down" + std::to_string(i), h, 2);
    h = ops::leaky_relu(ops::instance_norm(h), c.leaky_slope);
  }
  for (int i = c.generator_blocks; i >= 1; --i) {
    const std::string b = "dec.up" + std::to_string(i);
    h = conv(params_, b + ".conv", ops::upsample_nearest2x(h), 1);
    h = ops::modulate(ops::instance_norm(h), linear(params_, b + ".gain", style),
                      linear(params_, b + ".shift", style));
    h = ops::leaky_relu(h, c.leaky_slope);
  }
  return ops::tanh(conv(params_, "dec.out", h, 1));
}

// ---------------------------------------------------------------------------

StylingNetwork::StylingNetwork(const NetworkConfig& config, std::mt19937_64& rng) : config_(config) {
  config_.validate();
  const auto& c = config_;
  add_trunk(params_, c, rng);
  const int f = c.width(c.trunk_blocks);
  // Heads are stored as one [D*style_dim, F] map; rows d*style_dim.. belong to domain d.
  add_linear(params_, "style_heads", f, c.num_domains * c.style_dim, 0.0, rng);
  add_linear(params_, "classifier", f, c.num_domains, 0.0, rng);
}

StylingNetwork::StylingNetwork(NetworkConfig config, ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
}

StylingOutput StylingNetwork::forward(const Var& x) const {
  require_image_batch(x, config_, "styling_forward");
  const int n = x.value().dim(0);
  Var shared = trunk_forward(params_, config_, x);
  StylingOutput out;
  out.codes = ops::reshape(linear(params_, "style_heads", shared), {n, config_.num_domains, config_.style_dim});
  out.logits = linear(params_, "classifier", shared);
  out.probs = ops::softmax(out.logits);
  return out;
}

Var StylingNetwork::style_for(const Var& x, const std::vector<int>& domains) const {
  return ops::pick_rows(forward(x).codes, domains);
}

// ---------------------------------------------------------------------------

Discriminator::Discriminator(const NetworkConfig& config, std::mt19937_64& rng) : config_(config) {
  config_.validate();
  add_trunk(params_, config_, rng);
  add_linear(params_, "branches", config_.width(config_.trunk_blocks), config_.num_domains, 0.0, rng);
}

Discriminator::Discriminator(NetworkConfig config, ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
}

Var Discriminator::forward(const Var& x) const {
  require_image_batch(x, config_, "discriminator_forward");
  return linear(params_, "branches", trunk_forward(params_, config_, x));
}

// ---------------------------------------------------------------------------

ConvClassifier::ConvClassifier(const NetworkConfig& config, int outputs, std::mt19937_64& rng)
    : config_(config), outputs_(outputs) {
  config_.validate();
  CITGAN_REQUIRE(outputs >= 1, "classifier needs at least one output");
  add_trunk(params_, config_, rng);
  add_linear(params_, "head", feature_dim(), outputs, 0.0, rng);
}

ConvClassifier::ConvClassifier(NetworkConfig config, int outputs, ParameterSet params)
    : config_(std::move(config)), outputs_(outputs), params_(std::move(params)) {
  config_.validate();
}

int ConvClassifier::feature_dim() const noexcept { return config_.width(config_.trunk_blocks); }

Var ConvClassifier::features(const Var& x) const {
  require_image_batch(x, config_, "classifier_forward");
  return trunk_forward(params_, config_, x);
}

Var ConvClassifier::logits(const Var& x) const { return linear(params_, "head", features(x)); }

// ---------------------------------------------------------------------------

namespace {
std::mt19937_64 seeded(std::uint64_t seed) { return std::mt19937_64(seed); }
}  // namespace

CitGanModel::CitGanModel(const NetworkConfig& cfg, std::uint64_t seed)
    : CitGanModel([&] {
        auto rng = seeded(seed);
        Generator g(cfg, rng);
        StylingNetwork s(cfg, rng);
        Discriminator d(cfg, rng);
        return CitGanModel(cfg, std::move(g), std::move(s), std::move(d));
      }()) {}

CitGanModel::CitGanModel(NetworkConfig cfg, Generator g, StylingNetwork s, Discriminator d)
    : config(std::move(cfg)), generator(std::move(g)), styling(std::move(s)), discriminator(std::move(d)) {
  CITGAN_REQUIRE(styling.num_style_heads() == config.num_domains && discriminator.num_branches() == config.num_domains,
                 "style head / discriminator branch count must equal the domain count");
}

CitGanModel CitGanModel::clone() const {
  return CitGanModel(config, generator.clone(), styling.clone(), discriminator.clone());
}

}  // namespace citgan
