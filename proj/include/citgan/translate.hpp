#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "citgan/data/domains.hpp"
#include "citgan/networks.hpp"

namespace citgan {

/// G(source, S_{d'}(reference)) where d' is the reference's domain (looked up
/// by name in the model's registry). The result carries the reference's
/// domain and pa_class and synthetic provenance.
ImageSample translate(const CitGanModel& model, const DomainRegistry& model_registry, const ImageSample& source,
                      const ImageSample& reference, const DomainRegistry& data_registry);

/// Batched translation; reference_domains are indices in the model registry.
std::vector<Image> translate_images(const CitGanModel& model, const std::vector<const Image*>& sources,
                                    const std::vector<const Image*>& references,
                                    const std::vector<int>& reference_domains, int chunk = 32);

/// Which source and reference produced a synthetic sample (indices into the
/// lists passed to synthesize_set).
struct SynthesisRecord {
  int source = -1;
  int reference = -1;
};

struct SynthesisResult {
  std::vector<ImageSample> samples;
  std::vector<SynthesisRecord> records;
};

/// Generates `targets[name]` images for each named domain. Sources are drawn
/// without replacement (reshuffled when exhausted); references uniformly from
/// the references belonging to the target domain. The full pair schedule is
/// fixed from `seed` before any image is generated.
SynthesisResult synthesize_set(const CitGanModel& model, const DomainRegistry& model_registry,
                               const std::vector<const ImageSample*>& sources,
                               const std::vector<const ImageSample*>& references,
                               const std::map<std::string, int>& targets, const DomainRegistry& data_registry,
                               std::uint64_t seed);

/// Source of synthetic samples for the experiment builder.
class SyntheticSource {
 public:
  virtual ~SyntheticSource() = default;
  virtual SynthesisResult synthesize(const std::vector<const ImageSample*>& sources,
                                     const std::vector<const ImageSample*>& references,
                                     const std::map<std::string, int>& targets, const DomainRegistry& data_registry,
                                     std::uint64_t seed) = 0;
};

/// Synthesizes with a trained model.
class GeneratorSource : public SyntheticSource {
 public:
  GeneratorSource(const CitGanModel& model, DomainRegistry model_registry)
      : model_(model), registry_(std::move(model_registry)) {}
  SynthesisResult synthesize(const std::vector<const ImageSample*>& sources,
                             const std::vector<const ImageSample*>& references,
                             const std::map<std::string, int>& targets, const DomainRegistry& data_registry,
                             std::uint64_t seed) override;

 private:
  const CitGanModel& model_;
  DomainRegistry registry_;
};

/// Draws from a pre-generated pool of synthetic samples (per domain, without
/// replacement until exhausted). The record's reference is left at -1.
class PoolSource : public SyntheticSource {
 public:
  explicit PoolSource(std::vector<ImageSample> pool) : pool_(std::move(pool)) {}
  SynthesisResult synthesize(const std::vector<const ImageSample*>& sources,
                             const std::vector<const ImageSample*>& references,
                             const std::map<std::string, int>& targets, const DomainRegistry& data_registry,
                             std::uint64_t seed) override;

 private:
  std::vector<ImageSample> pool_;
};

/// Per-PA-domain training composition of one experiment.
struct DomainComposition {
  int domain = 0;
  int available = 0;  // real training samples of the domain
  int real = 0;       // real samples kept in the training set
  int synthetic = 0;  // synthetic samples added
  int references = 0; // real samples used only as style references
};

/// Composition rules:
///  1: all real PAs.
///  2: keep n - floor(n/2) real; generate floor(n/2) synthetic from the other
///     floor(n/2) real samples as references.
///  3: no real PAs; n synthetic.
///  4: keep min(n, target) real and top up to `target` with synthetic; the
///     target defaults to the largest domain count.
std::vector<DomainComposition> plan_experiment(int experiment_id, const std::vector<std::pair<int, int>>& pa_counts,
                                               std::optional<int> exp4_target = std::nullopt);

struct ExperimentOptions {
  std::uint64_t seed = 0;
  std::optional<int> exp4_target;
};

struct ExperimentSet {
  int experiment_id = 0;
  std::vector<ImageSample> train;
  std::vector<ImageSample> test;
  std::vector<DomainComposition> composition;
  std::vector<std::string> notes;  // written as manifest comments
  /// For every synthetic training sample: the real sample used as reference
  /// (index into the input dataset), or -1 when drawn from a pool.
  std::vector<int> synthetic_reference_rows;
};

/// Builds train/test sets for experiments 1-4. The test set is every real
/// test-split sample in input order and is identical across experiments.
/// Bonafide training samples are always kept; synthesis uses bonafide
/// training images as sources.
ExperimentSet build_experiment_set(int experiment_id, const std::vector<ImageSample>& dataset,
                                   const DomainRegistry& registry, SyntheticSource& source,
                                   const ExperimentOptions& options);

/// Writes images and `train.csv` / `test.csv` (with provenance column) under
/// dir. Samples without a path get `real/<domain>/<n>.png` or
/// `synthetic/<domain>/<n>.png`, so equal inputs give byte-identical files.
void write_experiment_set(const std::filesystem::path& dir, const ExperimentSet& set, const DomainRegistry& registry);

/// Writes synthetic samples as PNGs under dir and a manifest with provenance.
void write_synthetic_set(const std::filesystem::path& dir, const std::vector<ImageSample>& samples,
                         const DomainRegistry& registry, const std::string& manifest_name = "manifest.csv");

}  // namespace citgan
