#include "citgan/pad.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "citgan/core/errors.hpp"

namespace citgan {

namespace fs = std::filesystem;

namespace {

void check_scores(const ScoreSet& s) {
  CITGAN_REQUIRE(!s.bonafide.empty() && !s.pa.empty(), "score sets must be nonempty");
  for (double v : s.bonafide) CITGAN_REQUIRE(std::isfinite(v), "non-finite bonafide score");
  for (double v : s.pa) CITGAN_REQUIRE(std::isfinite(v), "non-finite PA score");
}

// Number of entries of a sorted list that are >= t.
long count_at_least(const std::vector<double>& sorted, double t) {
  return static_cast<long>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
}

double fraction(long count, std::size_t n) { return static_cast<double>(count) / static_cast<double>(n); }

}  // namespace

std::vector<double> tdr_at_fdr(const ScoreSet& scores, const std::vector<double>& fdr_targets) {
  check_scores(scores);
  for (double f : fdr_targets)
    if (!(f >= 0.0 && f <= 1.0)) throw ContractViolation("FDR target " + std::to_string(f) + " outside [0,1]");

  std::vector<double> bona = scores.bonafide, pa = scores.pa;
  std::sort(bona.begin(), bona.end());
  std::sort(pa.begin(), pa.end());
  std::vector<double> candidates = bona;
  candidates.insert(candidates.end(), pa.begin(), pa.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  candidates.push_back(std::numeric_limits<double>::infinity());

  std::vector<double> out;
  for (double f : fdr_targets) {
    // Feasibility is monotone in t, so the first feasible candidate is found by bisection.
    auto it = std::partition_point(candidates.begin(), candidates.end(), [&](double t) {
      return fraction(count_at_least(bona, t), bona.size()) > f;
    });
    out.push_back(fraction(count_at_least(pa, *it), pa.size()));
  }
  return out;
}

std::vector<RocPoint> roc_curve(const ScoreSet& scores) {
  check_scores(scores);
  std::vector<double> bona = scores.bonafide, pa = scores.pa;
  std::sort(bona.begin(), bona.end());
  std::sort(pa.begin(), pa.end());
  std::vector<double> candidates = bona;
  candidates.insert(candidates.end(), pa.begin(), pa.end());
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  candidates.insert(candidates.begin(), std::numeric_limits<double>::infinity());
  std::vector<RocPoint> roc;
  for (double t : candidates)
    roc.push_back({t, fraction(count_at_least(bona, t), bona.size()), fraction(count_at_least(pa, t), pa.size())});
  return roc;
}

PadResult evaluate_scores(int experiment_id, const std::string& classifier_id, const ScoreSet& scores,
                          const std::vector<double>& fdr_targets) {
  PadResult r;
  r.experiment_id = experiment_id;
  r.classifier_id = classifier_id;
  r.fdr_targets = fdr_targets;
  r.tdr = tdr_at_fdr(scores, fdr_targets);
  r.roc = roc_curve(scores);
  return r;
}

TrainedClassifier train_pad_classifier(const std::vector<ImageSample>& train, const ClassifierConfig& config) {
  std::vector<const Image*> images;
  std::vector<int> labels;
  long bona = 0, pa = 0;
  for (const auto& s : train) {
    images.push_back(&s.pixels);
    labels.push_back(s.is_bonafide() ? 0 : 1);
    (s.is_bonafide() ? bona : pa)++;
  }
  if (bona == 0) throw DataError("PAD training set has no bonafide samples");
  if (pa == 0) throw DataError("PAD training set has no PA samples");
  spdlog::info("training PAD classifier on {} bonafide / {} PA samples", bona, pa);
  TrainedClassifier out{train_classifier(images, labels, 1, config), {"pa"}, "cnn-pad"};
  return out;
}

ScoreSet score_samples(const ConvClassifier& net, const std::vector<ImageSample>& samples) {
  std::vector<const Image*> images;
  for (const auto& s : samples) images.push_back(&s.pixels);
  const Tensor logits = classifier_logits(net, images);
  CITGAN_REQUIRE(logits.dim(1) == 1, "PAD scoring needs a single-output classifier");
  ScoreSet scores;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double score = 1.0 / (1.0 + std::exp(-logits[i]));
    (samples[i].is_bonafide() ? scores.bonafide : scores.pa).push_back(score);
  }
  return scores;
}

ExperimentRun run_experiment(int experiment_id, const std::vector<ImageSample>& dataset,
                             const DomainRegistry& registry, SyntheticSource& source, const PadConfig& config) {
  ExperimentOptions opts;
  opts.seed = config.seed;
  opts.exp4_target = config.exp4_target;
  ExperimentSet set = build_experiment_set(experiment_id, dataset, registry, source, opts);
  TrainedClassifier clf = train_pad_classifier(set.train, config.classifier);
  PadResult result = evaluate_scores(experiment_id, clf.id, score_samples(clf.net, set.test));
  return {std::move(set), std::move(clf), std::move(result)};
}

std::string pad_results_header() { return "experiment,classifier,tdr_at_0.1,tdr_at_0.2,tdr_at_1.0"; }

void write_pad_results(const fs::path& path, const std::vector<PadResult>& results) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << pad_results_header() << '\n';
  for (const auto& r : results) {
    CITGAN_REQUIRE(r.tdr.size() == 3, "PAD results need TDR at three FDR targets");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", r.tdr[0], r.tdr[1], r.tdr[2]);
    out << r.experiment_id << ',' << r.classifier_id << ',' << buf << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<PadResult> read_pad_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != pad_results_header()) throw DataError(path.string() + ": unexpected header '" + line + "'");
  std::vector<PadResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw DataError(path.string() + ": malformed row '" + line + "'");
    PadResult r;
    r.experiment_id = std::stoi(fields[0]);
    r.classifier_id = fields[1];
    r.fdr_targets = kFdrTargets;
    for (int i = 2; i < 5; ++i) r.tdr.push_back(std::stod(fields[static_cast<std::size_t>(i)]));
    out.push_back(std::move(r));
  }
  return out;
}

void write_roc(const fs::path& path, const std::vector<RocPoint>& roc) {
  std::ofstream out(path);
  out.precision(10);
  out << "threshold,fdr,tdr\n";
  for (const auto& p : roc) out << p.threshold << ',' << p.fdr << ',' << p.tdr << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<PadResult> collect_pad_results(const fs::path& runs_dir) {
  if (!fs::is_directory(runs_dir)) throw ConfigError("runs directory '" + runs_dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(runs_dir))
    if (e.is_regular_file() && e.path().filename() == "pad_results.csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<PadResult> all;
  for (const auto& f : files) {
    auto rows = read_pad_results(f);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const PadResult& a, const PadResult& b) {
    return std::tie(a.experiment_id, a.classifier_id) < std::tie(b.experiment_id, b.classifier_id);
  });
  return all;
}

}  // namespace citgan
