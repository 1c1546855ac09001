#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "citgan/classifier.hpp"
#include "citgan/translate.hpp"

namespace citgan {

/// Classifier scores on a test set; higher means more PA-like.
struct ScoreSet {
  std::vector<double> bonafide;
  std::vector<double> pa;
};

inline const std::vector<double> kFdrTargets{0.001, 0.002, 0.01};

/// For each FDR target f: the threshold is the smallest observed score t (or
/// +inf when none qualifies) with fraction(bonafide >= t) <= f, and the TDR is
/// fraction(pa >= t).
std::vector<double> tdr_at_fdr(const ScoreSet& scores, const std::vector<double>& fdr_targets);

struct RocPoint {
  double threshold = 0.0;
  double fdr = 0.0;
  double tdr = 0.0;
};

/// One point per distinct candidate threshold, from +inf down to the lowest
/// score; fdr and tdr are non-decreasing along the list.
std::vector<RocPoint> roc_curve(const ScoreSet& scores);

struct PadResult {
  int experiment_id = 0;
  std::string classifier_id;
  std::vector<double> fdr_targets;
  std::vector<double> tdr;
  std::vector<RocPoint> roc;
};

PadResult evaluate_scores(int experiment_id, const std::string& classifier_id, const ScoreSet& scores,
                          const std::vector<double>& fdr_targets = kFdrTargets);

/// Binary bonafide (0) vs PA (1) classifier over the whole training set.
/// Throws DataError naming the missing class when either side is empty.
TrainedClassifier train_pad_classifier(const std::vector<ImageSample>& train, const ClassifierConfig& config);

/// Sigmoid PA score of every test sample, split by bonafide / PA.
ScoreSet score_samples(const ConvClassifier& net, const std::vector<ImageSample>& samples);

struct PadConfig {
  ClassifierConfig classifier;
  std::uint64_t seed = 0;  // experiment set composition and synthesis
  std::optional<int> exp4_target;
};

struct ExperimentRun {
  ExperimentSet set;
  TrainedClassifier classifier;
  PadResult result;
};

/// Builds the experiment's train/test sets, trains the reference classifier
/// and scores the test set.
ExperimentRun run_experiment(int experiment_id, const std::vector<ImageSample>& dataset,
                             const DomainRegistry& registry, SyntheticSource& source, const PadConfig& config);

/// `experiment,classifier,tdr_at_0.1,tdr_at_0.2,tdr_at_1.0`, 6 decimals.
std::string pad_results_header();
void write_pad_results(const std::filesystem::path& path, const std::vector<PadResult>& results);
/// Reads rows back (roc left empty).
std::vector<PadResult> read_pad_results(const std::filesystem::path& path);
void write_roc(const std::filesystem::path& path, const std::vector<RocPoint>& roc);

/// Collects every `pad_results.csv` below `runs_dir` into one table sorted
/// by experiment then classifier.
std::vector<PadResult> collect_pad_results(const std::filesystem::path& runs_dir);

}  // namespace citgan
