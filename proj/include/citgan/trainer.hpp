#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "citgan/checkpoint.hpp"
#include "citgan/data/domains.hpp"
#include "citgan/losses.hpp"

namespace citgan {

struct TrainConfig {
  long steps = 2000;
  int batch_size = 8;
  double lr_gs = 1e-4;  // generator and styling network
  double lr_d = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  LossWeights weights;
  Norm norm = Norm::L1;
  std::uint64_t seed = 0;
  long checkpoint_interval = 500;
  long log_interval = 10;
  NetworkConfig network;

  void validate() const;
  /// Hash of every field that affects the trajectory (step count and
  /// logging/checkpoint cadence excluded, so a run can be extended).
  std::string trajectory_hash() const;
};

/// Training images of every domain, pre-converted to network range.
class TrainingData {
 public:
  /// Keeps only train-split samples. Throws DataError naming the first
  /// registered domain without any training sample.
  TrainingData(const std::vector<ImageSample>& samples, const DomainRegistry& registry);

  int size() const noexcept { return static_cast<int>(domain_.size()); }
  int resolution() const noexcept { return resolution_; }
  int channels() const noexcept { return channels_; }
  const DomainRegistry& registry() const noexcept { return registry_; }
  int domain(int i) const { return domain_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& members(int domain) const { return by_domain_[static_cast<std::size_t>(domain)]; }
  /// Copies image i (CHW, values in [-1,1]) into dst.
  void copy_image(int i, double* dst) const;

 private:
  DomainRegistry registry_;
  int resolution_ = 0;
  int channels_ = 0;
  std::size_t image_size_ = 0;
  std::vector<double> pixels_;
  std::vector<int> domain_;
  std::vector<std::vector<int>> by_domain_;
};

/// Sources x with domains d, references y drawn from uniformly chosen target
/// domains d'.
struct TrainBatch {
  Tensor x;
  std::vector<int> d;
  Tensor y;
  std::vector<int> d_prime;
};

TrainBatch sample_batch(std::mt19937_64& rng, const TrainingData& data, int batch_size);

/// Gradient norms observed during one step; used to verify that the
/// discriminator and the generator/styling updates stay separated.
struct StepDiagnostics {
  double d_phase_gs_grad_norm = 0.0;  // G and S gradient mass after the D backward pass
  double gs_phase_d_grad_norm = 0.0;  // D gradient mass after the G+S backward pass
  double d_objective = 0.0;
  double g_adv_nonsaturating = 0.0;
};

/// Creates a fresh state: networks seeded from config.seed, optimizers with
/// the configured learning rates, data RNG seeded independently.
TrainState make_initial_state(const TrainConfig& config, const DomainRegistry& registry);

/// One discriminator ascent step on the adversarial objective followed by one
/// joint generator + styling descent step on the total loss. Increments
/// state.step. The reported `adv` is the adversarial objective evaluated in
/// the discriminator phase.
LossReport train_step(TrainState& state, const TrainBatch& batch, const TrainConfig& config,
                      StepDiagnostics* diagnostics = nullptr);

struct TrainResult {
  std::vector<LossReport> history;  // one entry per executed step
  std::filesystem::path final_checkpoint;
  std::filesystem::path loss_csv;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume_from;
  std::function<void(long step, const LossReport&)> on_step;
};

/// Runs train_step until state.step == config.steps. Writes
/// `step_NNNNNN.ckpt` every checkpoint_interval steps, `final.ckpt` at the end
/// and `losses.csv` (`step,adv,style,cls,cycle,total`, one row per logging
/// interval holding the interval means).
TrainResult train(const TrainConfig& config, const std::vector<ImageSample>& dataset, const DomainRegistry& registry,
                  const std::filesystem::path& out_dir, const TrainOptions& options = {});

/// Loss CSV row text.
std::string loss_csv_header();
std::string loss_csv_row(long step, const LossReport& r);

}  // namespace citgan
