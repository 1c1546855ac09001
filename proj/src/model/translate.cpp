#include "citgan/translate.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "citgan/core/errors.hpp"
#include "citgan/core/ops.hpp"

namespace citgan {

namespace fs = std::filesystem;

namespace {

int model_domain(const DomainRegistry& model_registry, const std::string& name) {
  auto idx = model_registry.find(name);
  if (!idx) throw DataError("domain '" + name + "' is not known to the model");
  return *idx;
}

}  // namespace

std::vector<Image> translate_images(const CitGanModel& model, const std::vector<const Image*>& sources,
                                    const std::vector<const Image*>& references,
                                    const std::vector<int>& reference_domains, int chunk) {
  CITGAN_REQUIRE(sources.size() == references.size() && sources.size() == reference_domains.size(),
                 "translate: sources, references and domains must have equal length");
  const auto& cfg = model.config;
  for (const auto* img : sources)
    CITGAN_REQUIRE(img->height == cfg.resolution && img->width == cfg.resolution && img->channels == cfg.channels,
                   "translate: source image is " + std::to_string(img->height) + "x" + std::to_string(img->width) +
                       ", model resolution is " + std::to_string(cfg.resolution));
  for (const auto* img : references)
    CITGAN_REQUIRE(img->height == cfg.resolution && img->width == cfg.resolution && img->channels == cfg.channels,
                   "translate: reference image does not match the model resolution " +
                       std::to_string(cfg.resolution));

  NoGradGuard no_grad;
  std::vector<Image> out;
  out.reserve(sources.size());
  const std::size_t n = sources.size();
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(chunk));
    std::vector<const Image*> src(sources.begin() + start, sources.begin() + end);
    std::vector<const Image*> ref(references.begin() + start, references.begin() + end);
    std::vector<int> dom(reference_domains.begin() + start, reference_domains.begin() + end);
    Var style = model.styling.style_for(Var::constant(to_network_batch(ref)), dom);
    Var y = model.generator.forward(Var::constant(to_network_batch(src)), style);
    for (std::size_t i = 0; i < src.size(); ++i) out.push_back(from_network_batch(y.value(), static_cast<int>(i)));
  }
  return out;
}

ImageSample translate(const CitGanModel& model, const DomainRegistry& model_registry, const ImageSample& source,
                      const ImageSample& reference, const DomainRegistry& data_registry) {
  const int d = model_domain(model_registry, data_registry.name(reference.domain));
  auto imgs = translate_images(model, {&source.pixels}, {&reference.pixels}, {d});
  ImageSample out;
  out.pixels = std::move(imgs.front());
  out.domain = reference.domain;
  out.split = source.split;
  out.pa_class = reference.pa_class;
  out.provenance = Provenance::Synthetic;
  return out;
}

namespace {

struct Schedule {
  std::vector<SynthesisRecord> pairs;
};

// Fixes the (source, reference) pair list before any generation happens.
Schedule make_schedule(const std::vector<const ImageSample*>& sources, const std::vector<const ImageSample*>& references,
                       const std::map<std::string, int>& targets, const DomainRegistry& data_registry,
                       std::uint64_t seed) {
  for (const auto& [name, count] : targets) {
    if (!data_registry.find(name)) throw DataError("synthesis target '" + name + "' is not a registered domain");
    CITGAN_REQUIRE(count >= 0, "synthesis target for '" + name + "' is negative");
  }
  std::mt19937_64 rng(seed);
  std::vector<int> order(sources.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  auto next_source = [&] {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    return order[cursor++];
  };

  Schedule s;
  for (int d = 0; d < data_registry.count(); ++d) {
    auto it = targets.find(data_registry.name(d));
    if (it == targets.end() || it->second == 0) continue;
    std::vector<int> refs;
    for (std::size_t i = 0; i < references.size(); ++i)
      if (references[i]->domain == d) refs.push_back(static_cast<int>(i));
    if (refs.empty()) throw DataError("no reference images for requested domain '" + data_registry.name(d) + "'");
    if (sources.empty()) throw DataError("no source images available for synthesis");
    std::uniform_int_distribution<std::size_t> pick(0, refs.size() - 1);
    for (int k = 0; k < it->second; ++k) {
      const int src = next_source();
      const int ref = refs[pick(rng)];
      s.pairs.push_back({src, ref});
    }
  }
  return s;
}

}  // namespace

SynthesisResult synthesize_set(const CitGanModel& model, const DomainRegistry& model_registry,
                               const std::vector<const ImageSample*>& sources,
                               const std::vector<const ImageSample*>& references,
                               const std::map<std::string, int>& targets, const DomainRegistry& data_registry,
                               std::uint64_t seed) {
  const Schedule schedule = make_schedule(sources, references, targets, data_registry, seed);
  std::vector<const Image*> src, ref;
  std::vector<int> dom;
  for (const auto& p : schedule.pairs) {
    const ImageSample* r = references[static_cast<std::size_t>(p.reference)];
    src.push_back(&sources[static_cast<std::size_t>(p.source)]->pixels);
    ref.push_back(&r->pixels);
    dom.push_back(model_domain(model_registry, data_registry.name(r->domain)));
  }
  std::vector<Image> images = translate_images(model, src, ref, dom);

  SynthesisResult out;
  out.records = schedule.pairs;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageSample* r = references[static_cast<std::size_t>(schedule.pairs[i].reference)];
    ImageSample s;
    s.pixels = std::move(images[i]);
    s.domain = r->domain;
    s.split = Split::Train;
    s.pa_class = r->pa_class;
    s.provenance = Provenance::Synthetic;
    out.samples.push_back(std::move(s));
  }
  return out;
}

SynthesisResult GeneratorSource::synthesize(const std::vector<const ImageSample*>& sources,
                                            const std::vector<const ImageSample*>& references,
                                            const std::map<std::string, int>& targets,
                                            const DomainRegistry& data_registry, std::uint64_t seed) {
  return synthesize_set(model_, registry_, sources, references, targets, data_registry, seed);
}

SynthesisResult PoolSource::synthesize(const std::vector<const ImageSample*>&, const std::vector<const ImageSample*>&,
                                       const std::map<std::string, int>& targets, const DomainRegistry& data_registry,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SynthesisResult out;
  for (int d = 0; d < data_registry.count(); ++d) {
    auto it = targets.find(data_registry.name(d));
    if (it == targets.end() || it->second == 0) continue;
    std::vector<int> members;
    for (std::size_t i = 0; i < pool_.size(); ++i)
      if (pool_[i].domain == d) members.push_back(static_cast<int>(i));
    if (members.empty()) throw DataError("synthetic pool has no samples for domain '" + data_registry.name(d) + "'");
    std::size_t cursor = members.size();
    for (int k = 0; k < it->second; ++k) {
      if (cursor == members.size()) {
        std::shuffle(members.begin(), members.end(), rng);
        cursor = 0;
      }
      ImageSample s = pool_[static_cast<std::size_t>(members[cursor++])];
      s.split = Split::Train;
      s.provenance = Provenance::Synthetic;
      out.samples.push_back(std::move(s));
      out.records.push_back({-1, -1});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<DomainComposition> plan_experiment(int experiment_id, const std::vector<std::pair<int, int>>& pa_counts,
                                               std::optional<int> exp4_target) {
  CITGAN_REQUIRE(experiment_id >= 1 && experiment_id <= 4,
                 "experiment id must be 1-4, got " + std::to_string(experiment_id));
  int largest = 0;
  for (const auto& [d, n] : pa_counts) {
    CITGAN_REQUIRE(n >= 0, "negative sample count");
    largest = std::max(largest, n);
  }
  const int target = exp4_target.value_or(largest);
  CITGAN_REQUIRE(target >= 0, "experiment-4 target must be non-negative");
  std::vector<DomainComposition> plan;
  for (const auto& [d, n] : pa_counts) {
    DomainComposition c{d, n, 0, 0, 0};
    switch (experiment_id) {
      case 1: c.real = n; break;
      case 2:
        c.references = n / 2;
        c.real = n - c.references;
        c.synthetic = c.references;
        break;
      case 3:
        c.references = n;
        c.synthetic = n;
        break;
      case 4:
        c.real = std::min(n, target);
        c.references = n;
        c.synthetic = target - c.real;
        break;
    }
    plan.push_back(c);
  }
  return plan;
}

ExperimentSet build_experiment_set(int experiment_id, const std::vector<ImageSample>& dataset,
                                   const DomainRegistry& registry, SyntheticSource& source,
                                   const ExperimentOptions& options) {
  ExperimentSet set;
  set.experiment_id = experiment_id;

  std::vector<std::vector<int>> pa_rows(static_cast<std::size_t>(registry.count()));
  std::vector<const ImageSample*> bonafide_train;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ImageSample& s = dataset[i];
    CITGAN_REQUIRE(s.provenance == Provenance::Real, "experiment datasets must contain real samples only");
    if (s.split == Split::Test) {
      set.test.push_back(s);
    } else if (s.is_bonafide()) {
      bonafide_train.push_back(&s);
      set.train.push_back(s);
    } else {
      pa_rows[static_cast<std::size_t>(s.domain)].push_back(static_cast<int>(i));
    }
  }
  std::vector<std::pair<int, int>> counts;
  for (int d = 0; d < registry.count(); ++d)
    if (!pa_rows[static_cast<std::size_t>(d)].empty())
      counts.emplace_back(d, static_cast<int>(pa_rows[static_cast<std::size_t>(d)].size()));
  if (counts.empty()) throw DataError("dataset has no presentation-attack training samples");
  set.composition = plan_experiment(experiment_id, counts, options.exp4_target);

  std::vector<int> kept_rows, reference_rows;
  std::map<std::string, int> targets;
  for (const auto& c : set.composition) {
    std::vector<int> rows = pa_rows[static_cast<std::size_t>(c.domain)];
    std::mt19937_64 rng(mix_seed(options.seed, 100 + static_cast<std::uint64_t>(c.domain)));
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<int> kept(rows.begin(), rows.begin() + c.real);
    std::vector<int> refs;
    if (experiment_id == 2)
      refs.assign(rows.begin() + c.real, rows.end());
    else if (experiment_id != 1)
      refs = pa_rows[static_cast<std::size_t>(c.domain)];
    std::sort(kept.begin(), kept.end());
    std::sort(refs.begin(), refs.end());
    kept_rows.insert(kept_rows.end(), kept.begin(), kept.end());
    reference_rows.insert(reference_rows.end(), refs.begin(), refs.end());
    if (c.synthetic > 0) targets[registry.name(c.domain)] = c.synthetic;
    set.notes.push_back("experiment " + std::to_string(experiment_id) + " domain=" + registry.name(c.domain) +
                        " available=" + std::to_string(c.available) + " real=" + std::to_string(c.real) +
                        " synthetic=" + std::to_string(c.synthetic) + " references=" + std::to_string(c.references));
    if (experiment_id == 2 && c.available % 2 == 1)
      set.notes.push_back("odd count for " + registry.name(c.domain) + ": real keeps ceil(n/2)=" +
                          std::to_string(c.real) + ", references/synthetic use floor(n/2)=" +
                          std::to_string(c.references));
  }
  std::sort(kept_rows.begin(), kept_rows.end());
  for (int r : kept_rows) set.train.push_back(dataset[static_cast<std::size_t>(r)]);

  if (!targets.empty()) {
    if (bonafide_train.empty()) throw DataError("synthesis needs bonafide training images as sources");
    std::vector<const ImageSample*> refs;
    for (int r : reference_rows) refs.push_back(&dataset[static_cast<std::size_t>(r)]);
    SynthesisResult syn = source.synthesize(bonafide_train, refs, targets, registry, mix_seed(options.seed, 7));
    for (std::size_t i = 0; i < syn.samples.size(); ++i) {
      const int ref = syn.records[i].reference;
      set.synthetic_reference_rows.push_back(ref < 0 ? -1 : reference_rows[static_cast<std::size_t>(ref)]);
      set.train.push_back(std::move(syn.samples[i]));
    }
  }
  return set;
}

namespace {

std::vector<SampleDescriptor> materialize(const fs::path& dir, const std::vector<ImageSample>& samples,
                                          const DomainRegistry& registry, const std::string& group) {
  std::map<std::string, int> counters;
  std::vector<SampleDescriptor> rows;
  for (const auto& s : samples) {
    SampleDescriptor d;
    d.domain = s.domain;
    d.split = s.split;
    d.pa_class = s.pa_class;
    d.provenance = s.provenance;
    if (!s.path.empty() && s.provenance == Provenance::Real) {
      d.path = s.path;
    } else {
      const std::string sub =
          (group.empty() ? "" : group + "/") + to_string(s.provenance) + "/" + registry.name(s.domain);
      const int n = counters[sub]++;
      d.path = sub + "/" + std::to_string(n) + ".png";
      write_png(dir / d.path, s.pixels);
    }
    rows.push_back(std::move(d));
  }
  return rows;
}

}  // namespace

void write_experiment_set(const fs::path& dir, const ExperimentSet& set, const DomainRegistry& registry) {
  fs::create_directories(dir);
  write_manifest(dir / "train.csv", materialize(dir, set.train, registry, "train"), registry, true, set.notes);
  write_manifest(dir / "test.csv", materialize(dir, set.test, registry, "test"), registry, true);
}

void write_synthetic_set(const fs::path& dir, const std::vector<ImageSample>& samples, const DomainRegistry& registry,
                         const std::string& manifest_name) {
  fs::create_directories(dir);
  write_manifest(dir / manifest_name, materialize(dir, samples, registry, ""), registry, true);
}

}  // namespace citgan
