#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "citgan/checkpoint.hpp"
#include "citgan/classifier.hpp"
#include "citgan/config/config.hpp"
#include "citgan/core/errors.hpp"
#include "citgan/fid.hpp"
#include "citgan/pad.hpp"
#include "citgan/trainer.hpp"
#include "citgan/translate.hpp"
#include "citgan/version.hpp"

namespace fs = std::filesystem;
using namespace citgan;

namespace {

constexpr int kExitUsage = 2;

// Collects everything written by a command so run.json can list it.
struct RunRecord {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string config_text;
  std::map<std::string, std::string> args;
  std::vector<std::string> outputs;

  void output(const fs::path& p) { outputs.push_back(p.string()); }

  void write(const fs::path& dir) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["versions"] = module_versions();
    j["args"] = args;
    if (!config_text.empty()) j["config"] = config_text;
    j["outputs"] = outputs;
    fs::create_directories(dir);
    std::ofstream out(dir / "run.json");
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing " + (dir / "run.json").string());
  }
};

std::string args_hash(const std::map<std::string, std::string>& args) {
  std::string text;
  for (const auto& [k, v] : args) text += k + "=" + v + "\n";
  return hex64(fnv1a64(text.data(), text.size()));
}

AppConfig read_config(const fs::path& path) {
  AppConfig cfg = load_config(path);
  if (apply_seed_override(cfg)) spdlog::info("seed overridden from CITGAN_SEED: {}", cfg.seed);
  return cfg;
}

std::vector<ImageSample> load_samples(const fs::path& manifest_path, const DomainRegistry& registry,
                                      const ImageLoadOptions& opts) {
  const Manifest m = load_manifest(manifest_path, registry);
  LoadedImages loaded = load_images(m, opts);
  if (!loaded.failures.empty())
    spdlog::warn("{}: {} of {} rows could not be decoded", manifest_path.string(), loaded.failures.size(),
                 m.rows.size());
  return std::move(loaded.samples);
}

// "A=5,B=0,C=2"
std::map<std::string, int> parse_targets(const std::string& spec) {
  std::map<std::string, int> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("bad --targets entry '" + item + "', expected NAME=COUNT");
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad count in --targets entry '" + item + "'");
    }
    if (n < 0) throw ConfigError("negative count in --targets entry '" + item + "'");
    if (!out.emplace(item.substr(0, eq), n).second) throw ConfigError("domain repeated in --targets: " + item);
  }
  if (out.empty()) throw ConfigError("--targets is empty");
  return out;
}

void write_samples(const fs::path& dir, const std::vector<ImageSample>& samples, const DomainRegistry& registry,
                   std::vector<SampleDescriptor>& rows) {
  std::map<int, int> counter;
  for (const auto& s : samples) {
    const fs::path rel = fs::path(to_string(s.split)) / registry.name(s.domain) /
                         (std::to_string(counter[s.domain]++) + ".png");
    fs::create_directories((dir / rel).parent_path());
    write_png(dir / rel, s.pixels);
    rows.push_back({rel.string(), s.domain, s.split, s.pa_class, s.provenance});
  }
}

int cmd_toydata(const fs::path& out, std::uint64_t seed, int per_domain, int test_per_domain, int resolution, bool pad,
                double minority_fraction) {
  RunRecord rec;
  rec.command = "toydata";
  rec.seed = seed;
  rec.args = {{"out", out.string()},
              {"seed", std::to_string(seed)},
              {"per_domain", std::to_string(per_domain)},
              {"test_per_domain", std::to_string(test_per_domain)},
              {"resolution", std::to_string(resolution)},
              {"pad", pad ? "true" : "false"},
              {"minority_fraction", std::to_string(minority_fraction)}};
  rec.config_hash = args_hash(rec.args);

  if (per_domain < 1) throw ConfigError("--per-domain must be at least 1");
  if (test_per_domain < 0) throw ConfigError("--test-per-domain must be >= 0");
  if (minority_fraction < 0.0 || minority_fraction > 1.0) throw ConfigError("--minority-fraction must be in [0,1]");
  auto specs_for = [&](int n) {
    if (!pad) return standard_toy_specs(n);
    const int minority = std::max(n > 0 ? 1 : 0, static_cast<int>(std::lround(n * minority_fraction)));
    return toy_pad_specs(n, n, n, minority);
  };
  const DomainRegistry registry = pad ? toy_pad_registry() : standard_toy_registry();
  std::vector<ImageSample> samples = generate_toy_set(mix_seed(seed, 1), specs_for(per_domain), resolution, Split::Train);
  if (test_per_domain > 0) {
    auto test = generate_toy_set(mix_seed(seed, 2), specs_for(test_per_domain), resolution, Split::Test);
    samples.insert(samples.end(), std::make_move_iterator(test.begin()), std::make_move_iterator(test.end()));
  }
  std::vector<SampleDescriptor> rows;
  write_samples(out, samples, registry, rows);
  write_manifest(out / "manifest.csv", rows, registry);
  rec.output(out / "manifest.csv");
  rec.write(out);
  spdlog::info("wrote {} images and {}", rows.size(), (out / "manifest.csv").string());
  return 0;
}

int cmd_train(const fs::path& config_path, const fs::path& out, const std::optional<fs::path>& resume) {
  AppConfig cfg = read_config(config_path);
  if (cfg.data.manifest.empty()) throw ConfigError("data.manifest is not set in " + config_path.string());
  const DomainRegistry registry = registry_from_manifest(cfg.data.manifest);
  const auto samples = load_samples(cfg.data.manifest, registry, cfg.data.load);
  RunRecord rec;
  rec.command = "train";
  rec.seed = cfg.seed;
  rec.config_text = format_config(cfg);
  rec.config_hash = config_hash(cfg);
  rec.args = {{"config", config_path.string()}, {"out", out.string()}};
  if (resume) rec.args["resume"] = resume->string();

  TrainOptions opts;
  opts.resume_from = resume;
  const TrainResult result = train(cfg.train, samples, registry, out, opts);
  std::ofstream(out / "config.ini") << rec.config_text;
  rec.output(result.final_checkpoint);
  rec.output(result.loss_csv);
  rec.output(out / "config.ini");
  for (const auto& r : result.history)
    if (!std::isfinite(r.total)) throw NumericalError("non-finite loss recorded");
  rec.write(out);
  return 0;
}

int cmd_extractor(const fs::path& config_path, const fs::path& out) {
  AppConfig cfg = read_config(config_path);
  if (cfg.data.manifest.empty()) throw ConfigError("data.manifest is not set in " + config_path.string());
  const DomainRegistry registry = registry_from_manifest(cfg.data.manifest);
  auto samples = load_samples(cfg.data.manifest, registry, cfg.data.load);
  std::vector<const Image*> images;
  std::vector<int> labels;
  for (const auto& s : samples)
    if (s.split == Split::Train) {
      images.push_back(&s.pixels);
      labels.push_back(s.domain);
    }
  if (registry.count() < 2) throw DataError("the domain classifier needs at least two domains");
  TrainedClassifier clf{train_classifier(images, labels, registry.count(), cfg.extractor), registry.names(),
                        "domain-classifier"};
  save_classifier(out, clf);
  RunRecord rec;
  rec.command = "extractor";
  rec.seed = cfg.seed;
  rec.config_text = format_config(cfg);
  rec.config_hash = config_hash(cfg);
  rec.args = {{"config", config_path.string()}, {"out", out.string()}};
  rec.output(out);
  rec.write(fs::absolute(out).parent_path());
  return 0;
}

int cmd_generate(const fs::path& checkpoint, const fs::path& sources_path, const fs::path& references_path,
                 const std::string& targets_spec, const fs::path& out, std::uint64_t seed) {
  const LoadedModel lm = load_model(checkpoint);
  const auto& net = lm.model.config;
  const ImageLoadOptions opts{net.resolution, net.channels, Interpolation::Bilinear};
  const DomainRegistry src_registry = registry_from_manifest(sources_path);
  const DomainRegistry ref_registry = registry_from_manifest(references_path);
  const auto sources = load_samples(sources_path, src_registry, opts);
  const auto references = load_samples(references_path, ref_registry, opts);
  const auto targets = parse_targets(targets_spec);
  for (const auto& [name, n] : targets) {
    (void)n;
    if (!lm.registry.find(name)) throw DataError("target domain '" + name + "' is not known to the checkpoint");
  }
  std::vector<const ImageSample*> src_ptrs, ref_ptrs;
  for (const auto& s : sources) src_ptrs.push_back(&s);
  for (const auto& s : references) ref_ptrs.push_back(&s);
  if (src_ptrs.empty()) throw DataError("no source images in " + sources_path.string());
  const SynthesisResult result = synthesize_set(lm.model, lm.registry, src_ptrs, ref_ptrs, targets, ref_registry, seed);
  write_synthetic_set(out, result.samples, ref_registry);

  RunRecord rec;
  rec.command = "generate";
  rec.seed = seed;
  rec.args = {{"checkpoint", checkpoint.string()}, {"sources", sources_path.string()},
              {"references", references_path.string()}, {"targets", targets_spec},
              {"out", out.string()}, {"seed", std::to_string(seed)}};
  rec.config_hash = args_hash(rec.args);
  rec.output(out / "manifest.csv");
  rec.write(out);
  spdlog::info("wrote {} synthetic images to {}", result.samples.size(), out.string());
  return 0;
}

int cmd_fid(const fs::path& extractor_path, const fs::path& real_path, const fs::path& synthetic_path, int bootstrap,
            int subset, std::uint64_t seed, const fs::path& out) {
  auto clf = std::make_shared<TrainedClassifier>(load_classifier(extractor_path));
  const FeatureExtractor fx = classifier_extractor(clf);
  const auto& net = clf->net.config();
  const ImageLoadOptions opts{net.resolution, net.channels, Interpolation::Bilinear};
  const DomainRegistry real_registry = registry_from_manifest(real_path);
  const DomainRegistry syn_registry = registry_from_manifest(synthetic_path);
  const auto real = load_samples(real_path, real_registry, opts);
  const auto syn = load_samples(synthetic_path, syn_registry, opts);

  std::vector<std::string> domains;
  std::vector<std::vector<const Image*>> real_sets, syn_sets;
  for (const auto& name : syn_registry.names()) {
    const auto r = real_registry.find(name);
    if (!r) {
      spdlog::warn("domain '{}' has no real images; skipped", name);
      continue;
    }
    const int s = syn_registry.index_of(name);
    std::vector<const Image*> rs, ss;
    for (const auto& x : real)
      if (x.domain == *r) rs.push_back(&x.pixels);
    for (const auto& x : syn)
      if (x.domain == s) ss.push_back(&x.pixels);
    if (ss.empty()) continue;
    domains.push_back(name);
    real_sets.push_back(std::move(rs));
    syn_sets.push_back(std::move(ss));
  }
  if (domains.empty()) throw DataError("no domain appears in both manifests");

  const auto results = fid_distribution(fx, domains, real_sets, syn_sets, bootstrap, subset, seed);
  write_fid_report(out, results);

  RunRecord rec;
  rec.command = "fid";
  rec.seed = seed;
  rec.args = {{"extractor", extractor_path.string()}, {"real", real_path.string()},
              {"synthetic", synthetic_path.string()}, {"bootstrap", std::to_string(bootstrap)},
              {"subset", std::to_string(subset)},     {"seed", std::to_string(seed)},
              {"out", out.string()}};
  rec.config_hash = args_hash(rec.args);

  std::ofstream floor(out / "noise_floor.csv");
  floor.precision(10);
  floor << "domain,noise_floor\n";
  for (std::size_t d = 0; d < domains.size(); ++d) {
    if (real_sets[d].size() < 8) continue;
    floor << domains[d] << ',' << fid_noise_floor(fx.extract(real_sets[d]), bootstrap, mix_seed(seed, d)) << '\n';
  }
  rec.output(out / "fid_report.csv");
  for (const auto& r : results) {
    rec.output(out / ("fid_hist_" + r.domain + ".csv"));
    std::printf("%-16s mean %.6f  std %.6f  (n=%zu)\n", r.domain.c_str(), r.mean, r.stddev, r.values.size());
  }
  rec.output(out / "noise_floor.csv");
  rec.write(out);
  return 0;
}

bool pad_invariants_hold(const PadResult& r) {
  for (std::size_t i = 0; i < r.tdr.size(); ++i) {
    if (r.tdr[i] < 0.0 || r.tdr[i] > 1.0) return false;
    if (i > 0 && r.tdr[i] < r.tdr[i - 1]) return false;
  }
  for (std::size_t i = 1; i < r.roc.size(); ++i)
    if (r.roc[i].fdr < r.roc[i - 1].fdr || r.roc[i].tdr < r.roc[i - 1].tdr) return false;
  return true;
}

int cmd_pad(int experiment, const fs::path& config_path, const fs::path& out) {
  AppConfig cfg = read_config(config_path);
  if (experiment < 1 || experiment > 4) throw ConfigError("--experiment must be 1, 2, 3 or 4");
  if (cfg.data.manifest.empty()) throw ConfigError("data.manifest is not set in " + config_path.string());
  const DomainRegistry registry = registry_from_manifest(cfg.data.manifest);
  const auto dataset = load_samples(cfg.data.manifest, registry, cfg.data.load);

  std::optional<LoadedModel> lm;
  std::unique_ptr<SyntheticSource> source;
  if (experiment == 1) {
    source = std::make_unique<PoolSource>(std::vector<ImageSample>{});
  } else {
    if (cfg.pad.checkpoint.empty()) throw ConfigError("pad.checkpoint is required for experiment " + std::to_string(experiment));
    lm.emplace(load_model(cfg.pad.checkpoint));
    source = std::make_unique<GeneratorSource>(lm->model, lm->registry);
  }
  PadConfig pc;
  pc.classifier = cfg.pad.classifier;
  pc.seed = cfg.seed;
  if (cfg.pad.exp4_target > 0) pc.exp4_target = cfg.pad.exp4_target;

  const ExperimentRun run = run_experiment(experiment, dataset, registry, *source, pc);
  write_experiment_set(out, run.set, registry);
  write_pad_results(out / "pad_results.csv", {run.result});
  write_roc(out / "roc.csv", run.result.roc);
  save_classifier(out / "pad_classifier.ckpt", run.classifier);

  RunRecord rec;
  rec.command = "pad";
  rec.seed = cfg.seed;
  rec.config_text = format_config(cfg);
  rec.config_hash = config_hash(cfg);
  rec.args = {{"experiment", std::to_string(experiment)}, {"config", config_path.string()}, {"out", out.string()}};
  for (const char* f : {"train.csv", "test.csv", "pad_results.csv", "roc.csv", "pad_classifier.ckpt"})
    rec.output(out / f);
  rec.write(out);
  std::printf("experiment %d: TDR @0.1%% %.6f  @0.2%% %.6f  @1.0%% %.6f\n", experiment, run.result.tdr[0],
              run.result.tdr[1], run.result.tdr[2]);
  if (!pad_invariants_hold(run.result)) {
    spdlog::error("PAD result violates ROC monotonicity or TDR range");
    return 1;
  }
  return 0;
}

int cmd_report(const fs::path& runs, const std::optional<fs::path>& out_opt) {
  const auto results = collect_pad_results(runs);
  if (results.empty()) throw DataError("no pad_results.csv found under " + runs.string());
  const fs::path out = out_opt.value_or(runs / "report.csv");
  write_pad_results(out, results);
  std::printf("%-10s %-14s %10s %10s %10s\n", "experiment", "classifier", "TDR@0.1%", "TDR@0.2%", "TDR@1.0%");
  for (const auto& r : results)
    std::printf("%-10d %-14s %10.6f %10.6f %10.6f\n", r.experiment_id, r.classifier_id.c_str(), r.tdr[0], r.tdr[1],
                r.tdr[2]);
  RunRecord rec;
  rec.command = "report";
  rec.args = {{"runs", runs.string()}, {"out", out.string()}};
  rec.config_hash = args_hash(rec.args);
  rec.output(out);
  rec.write(fs::absolute(out).parent_path());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("citgan"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"Multi-domain image translation, FID evaluation and PAD experiments"};
  app.require_subcommand(1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default config and exit");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  fs::path out, config, checkpoint, sources, references, extractor, real, synthetic, runs;
  std::optional<fs::path> resume, report_out;
  std::uint64_t seed = 0;
  int per_domain = 300, test_per_domain = -1, resolution = 32, bootstrap = 20, subset = 50, experiment = 0;
  bool pad_set = false;
  double minority_fraction = 1.0;
  std::string targets;

  auto* toydata = app.add_subcommand("toydata", "Render procedural toy domains and a manifest");
  toydata->add_option("--out", out, "Output directory")->required();
  toydata->add_option("--seed", seed, "Seed")->default_val(0);
  toydata->add_option("--per-domain", per_domain, "Training images per domain")->default_val(300);
  toydata->add_option("--test-per-domain", test_per_domain, "Test images per domain (default: per-domain / 3)");
  toydata->add_option("--resolution", resolution, "Image side length")->default_val(32);
  toydata->add_flag("--pad", pad_set, "Add a bonafide domain and use the pattern domains as PA classes");
  toydata->add_option("--minority-fraction", minority_fraction, "Relative size of the blobs domain (with --pad)")
      ->default_val(1.0);

  auto* train_cmd = app.add_subcommand("train", "Train the translation model");
  train_cmd->add_option("--config", config, "Config file")->required();
  train_cmd->add_option("--out", out, "Output directory")->required();
  train_cmd->add_option("--resume", resume, "Checkpoint to resume from");

  auto* extractor_cmd = app.add_subcommand("extractor", "Train the domain classifier used as FID feature extractor");
  extractor_cmd->add_option("--config", config, "Config file")->required();
  extractor_cmd->add_option("--out", out, "Output checkpoint file")->required();

  auto* generate = app.add_subcommand("generate", "Translate sources into reference domains");
  generate->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  generate->add_option("--sources", sources, "Source manifest")->required();
  generate->add_option("--references", references, "Reference manifest")->required();
  generate->add_option("--targets", targets, "Per-domain counts, e.g. A=5,B=0,C=2")->required();
  generate->add_option("--out", out, "Output directory")->required();
  generate->add_option("--seed", seed, "Seed")->default_val(0);

  auto* fid_cmd = app.add_subcommand("fid", "Per-domain FID distribution of a synthetic set");
  fid_cmd->add_option("--extractor", extractor, "Feature extractor checkpoint")->required();
  fid_cmd->add_option("--real", real, "Real manifest")->required();
  fid_cmd->add_option("--synthetic", synthetic, "Synthetic manifest")->required();
  fid_cmd->add_option("--bootstrap", bootstrap, "Bootstrap resamples")->default_val(20);
  fid_cmd->add_option("--subset", subset, "Images per resample")->default_val(50);
  fid_cmd->add_option("--seed", seed, "Seed")->default_val(0);
  fid_cmd->add_option("--out", out, "Report directory (default: next to the synthetic manifest)");

  auto* pad_cmd = app.add_subcommand("pad", "Run one PAD experiment");
  pad_cmd->add_option("--experiment", experiment, "Experiment id")->required()->check(CLI::Range(1, 4));
  pad_cmd->add_option("--config", config, "Config file")->required();
  pad_cmd->add_option("--out", out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Consolidate PAD results");
  report->add_option("--runs", runs, "Directory holding experiment runs")->required();
  report->add_option("--out", report_out, "Output CSV (default: RUNS/report.csv)");

  if (argc >= 2 && std::string(argv[1]) == "--print-defaults") {
    std::cout << format_config(AppConfig{});
    return 0;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return kExitUsage;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (toydata->parsed())
      return cmd_toydata(out, seed, per_domain, test_per_domain >= 0 ? test_per_domain : std::max(1, per_domain / 3),
                         resolution, pad_set, minority_fraction);
    if (train_cmd->parsed()) return cmd_train(config, out, resume);
    if (extractor_cmd->parsed()) return cmd_extractor(config, out);
    if (generate->parsed()) return cmd_generate(checkpoint, sources, references, targets, out, seed);
    if (fid_cmd->parsed())
      return cmd_fid(extractor, real, synthetic, bootstrap, subset, seed,
                     out.empty() ? fs::absolute(synthetic).parent_path() / "fid" : out);
    if (pad_cmd->parsed()) return cmd_pad(experiment, config, out);
    if (report->parsed()) return cmd_report(runs, report_out);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return kExitUsage;
}
