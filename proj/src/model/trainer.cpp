#include "citgan/trainer.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "citgan/core/errors.hpp"
#include "citgan/core/ops.hpp"

namespace citgan {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("train.steps must be non-negative");
  if (batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (checkpoint_interval < 1 || log_interval < 1) throw ConfigError("checkpoint and log intervals must be positive");
  for (double lr : {lr_gs, lr_d})
    if (!(lr > 0.0 && lr < 1.0)) throw ConfigError("learning rates must lie in (0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  try {
    weights.validate();
    network.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

std::string TrainConfig::trajectory_hash() const {
  std::ostringstream os;
  os.precision(17);
  os << batch_size << '|' << lr_gs << '|' << lr_d << '|' << beta1 << '|' << beta2 << '|' << weights.lambda_style
     << '|' << weights.lambda_cls << '|' << weights.lambda_cycle << '|' << to_string(norm) << '|' << seed << '|'
     << network.resolution << '|' << network.channels << '|' << network.style_dim << '|' << network.base_width << '|'
     << network.max_width << '|' << network.num_domains << '|' << network.generator_blocks << '|'
     << network.trunk_blocks << '|' << network.leaky_slope;
  const std::string s = os.str();
  return hex64(fnv1a64(s.data(), s.size()));
}

// ---------------------------------------------------------------------------

TrainingData::TrainingData(const std::vector<ImageSample>& samples, const DomainRegistry& registry)
    : registry_(registry), by_domain_(static_cast<std::size_t>(registry.count())) {
  for (const auto& s : samples) {
    if (s.split != Split::Train) continue;
    CITGAN_REQUIRE(s.domain >= 0 && s.domain < registry.count(),
                   "sample domain index " + std::to_string(s.domain) + " outside the registry");
    const Image& img = s.pixels;
    if (domain_.empty()) {
      resolution_ = img.height;
      channels_ = img.channels;
      image_size_ = img.pixels.size();
    }
    CITGAN_REQUIRE(img.height == resolution_ && img.width == resolution_ && img.channels == channels_,
                   "training images must share one square resolution and channel count");
    by_domain_[static_cast<std::size_t>(s.domain)].push_back(static_cast<int>(domain_.size()));
    domain_.push_back(s.domain);
    // channel-last [0,1] -> channel-first [-1,1]
    for (int c = 0; c < channels_; ++c)
      for (int y = 0; y < resolution_; ++y)
        for (int x = 0; x < resolution_; ++x) pixels_.push_back(2.0 * img.at(y, x, c) - 1.0);
  }
  for (int k = 0; k < registry.count(); ++k)
    if (by_domain_[static_cast<std::size_t>(k)].empty())
      throw DataError("domain '" + registry.name(k) + "' has no training samples");
}

void TrainingData::copy_image(int i, double* dst) const {
  const double* src = pixels_.data() + static_cast<std::size_t>(i) * image_size_;
  std::copy(src, src + image_size_, dst);
}

TrainBatch sample_batch(std::mt19937_64& rng, const TrainingData& data, int batch_size) {
  const int r = data.resolution(), c = data.channels();
  const std::size_t stride = static_cast<std::size_t>(c) * r * r;
  TrainBatch b{Tensor({batch_size, c, r, r}), {}, Tensor({batch_size, c, r, r}), {}};
  std::uniform_int_distribution<int> pick_source(0, data.size() - 1);
  std::uniform_int_distribution<int> pick_domain(0, data.registry().count() - 1);
  for (int i = 0; i < batch_size; ++i) {
    const int src = pick_source(rng);
    data.copy_image(src, b.x.data() + i * stride);
    b.d.push_back(data.domain(src));
    const int target = pick_domain(rng);
    const auto& pool = data.members(target);
    const int ref = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    data.copy_image(ref, b.y.data() + i * stride);
    b.d_prime.push_back(target);
  }
  return b;
}

// ---------------------------------------------------------------------------

namespace {

double grad_mass(const ParameterSet& p) {
  double s = 0.0;
  for (const auto& e : p.entries())
    if (e.second.has_grad())
      for (double g : e.second.grad().values()) s += g * g;
  return std::sqrt(s);
}

void check_finite(double v, const char* what, long step) {
  if (!std::isfinite(v)) throw DivergenceError(step, std::string("non-finite ") + what);
}

}  // namespace

TrainState make_initial_state(const TrainConfig& config, const DomainRegistry& registry) {
  NetworkConfig net = config.network;
  net.num_domains = registry.count();
  AdamConfig gs{config.lr_gs, config.beta1, config.beta2, 1e-8};
  AdamConfig d{config.lr_d, config.beta1, config.beta2, 1e-8};
  return TrainState(CitGanModel(net, mix_seed(config.seed, 1)), registry, gs, d, mix_seed(config.seed, 2));
}

LossReport train_step(TrainState& state, const TrainBatch& batch, const TrainConfig& config,
                      StepDiagnostics* diagnostics) {
  auto& G = state.model.generator;
  auto& S = state.model.styling;
  auto& D = state.model.discriminator;
  const long step = state.step + 1;
  G.params().zero_grad();
  S.params().zero_grad();
  D.params().zero_grad();

  Var x = Var::constant(batch.x);
  Var y = Var::constant(batch.y);

  // Reference style codes and the translation, recorded once for both phases.
  D.params().set_requires_grad(false);
  Var s_prime = S.style_for(y, batch.d_prime);
  Var fake = G.forward(x, s_prime);

  // Discriminator phase: ascend the adversarial objective on detached fakes.
  D.params().set_requires_grad(true);
  Var adv = adversarial_loss(D.forward(x), batch.d, D.forward(fake.detach()), batch.d_prime);
  check_finite(adv.value().item(), "adversarial loss", step);
  Var d_objective = ops::scale(adv, -1.0);
  d_objective.backward();
  const double d_phase_gs = grad_mass(G.params()) + grad_mass(S.params());
  state.opt_discriminator.step(D.params());
  D.params().zero_grad();

  // Generator + styling phase with the discriminator frozen.
  D.params().set_requires_grad(false);
  StylingOutput source = S.forward(x);
  Var s = ops::pick_rows(source.codes, batch.d);
  Var cls = domain_classification_loss(source.logits, batch.d);
  Var adv_g = generator_adversarial_loss(D.forward(fake), batch.d_prime);
  Var style = style_loss(s_prime, S.style_for(fake, batch.d_prime), config.norm);
  Var cycle = cycle_loss(x, G.forward(fake, s), config.norm);
  const LossReport report = total_loss(adv.value().item(), style.value().item(), cls.value().item(),
                                       cycle.value().item(), config.weights, step);
  check_finite(adv_g.value().item(), "generator adversarial loss", step);

  const auto& w = config.weights;
  Var objective = ops::add(ops::add(adv_g, ops::scale(style, w.lambda_style)),
                           ops::add(ops::scale(cls, w.lambda_cls), ops::scale(cycle, w.lambda_cycle)));
  objective.backward();
  const double gs_phase_d = grad_mass(D.params());
  state.opt_generator.step(G.params());
  state.opt_styling.step(S.params());
  G.params().zero_grad();
  S.params().zero_grad();
  D.params().set_requires_grad(true);

  state.step = step;
  if (diagnostics) {
    diagnostics->d_phase_gs_grad_norm = d_phase_gs;
    diagnostics->gs_phase_d_grad_norm = gs_phase_d;
    diagnostics->d_objective = d_objective.value().item();
    diagnostics->g_adv_nonsaturating = adv_g.value().item();
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string loss_csv_header() { return "step,adv,style,cls,cycle,total"; }

std::string loss_csv_row(long step, const LossReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%.9g,%.9g,%.9g", step, r.adv, r.style, r.cls, r.cycle, r.total);
  return buf;
}

namespace {

std::string step_name(long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06ld.ckpt", step);
  return buf;
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<ImageSample>& dataset, const DomainRegistry& registry,
                  const fs::path& out_dir, const TrainOptions& options) {
  config.validate();
  const TrainingData data(dataset, registry);
  CITGAN_REQUIRE(data.resolution() == config.network.resolution && data.channels() == config.network.channels,
                 "training images are " + std::to_string(data.resolution()) + "x" + std::to_string(data.resolution()) +
                     " with " + std::to_string(data.channels()) + " channel(s), config expects " +
                     std::to_string(config.network.resolution) + " / " + std::to_string(config.network.channels));
  const std::string hash = config.trajectory_hash();

  std::optional<TrainState> state;
  if (options.resume_from) {
    std::string stored;
    state.emplace(load_checkpoint(*options.resume_from, &stored));
    if (stored != hash)
      throw ConfigError("checkpoint " + options.resume_from->string() + " was written under config hash " + stored +
                        ", current config hashes to " + hash);
    if (!(state->registry == registry)) throw ConfigError("checkpoint domains differ from the dataset registry");
    if (state->step > config.steps)
      throw ConfigError("checkpoint is at step " + std::to_string(state->step) + ", beyond train.steps");
  } else {
    state.emplace(make_initial_state(config, registry));
  }

  fs::create_directories(out_dir);
  TrainResult result;
  result.loss_csv = out_dir / "losses.csv";
  const bool append = options.resume_from && fs::exists(result.loss_csv);
  std::ofstream csv(result.loss_csv, append ? std::ios::app : std::ios::trunc);
  if (!csv) throw Error("cannot write " + result.loss_csv.string());
  if (!append) csv << loss_csv_header() << '\n';

  LossReport acc;
  long acc_n = 0;
  while (state->step < config.steps) {
    TrainBatch batch = sample_batch(state->rng, data, config.batch_size);
    const LossReport r = train_step(*state, batch, config);
    result.history.push_back(r);
    acc.adv += r.adv;
    acc.style += r.style;
    acc.cls += r.cls;
    acc.cycle += r.cycle;
    acc.total += r.total;
    ++acc_n;
    if (options.on_step) options.on_step(state->step, r);
    if (state->step % config.log_interval == 0 || state->step == config.steps) {
      const double n = static_cast<double>(acc_n);
      csv << loss_csv_row(state->step, {acc.adv / n, acc.style / n, acc.cls / n, acc.cycle / n, acc.total / n})
          << '\n';
      csv.flush();
      acc = {};
      acc_n = 0;
    }
    if (state->step % config.checkpoint_interval == 0)
      save_checkpoint(out_dir / step_name(state->step), *state, hash);
  }
  result.final_checkpoint = out_dir / "final.ckpt";
  save_checkpoint(result.final_checkpoint, *state, hash);
  spdlog::info("training finished at step {}; checkpoint {}", state->step, result.final_checkpoint.string());
  return result;
}

}  // namespace citgan
