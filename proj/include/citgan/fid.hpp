#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "citgan/classifier.hpp"
#include "citgan/data/image.hpp"

namespace citgan {

/// Sample mean and unbiased (n-1) covariance of a feature set.
struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  long n = 0;
};

/// Streaming mean / scatter accumulator. `merge` combines two partial
/// accumulators exactly (pairwise update), so chunked and single-pass
/// accumulation agree up to rounding.
class RunningGaussian {
 public:
  explicit RunningGaussian(int dim);

  void add(const Eigen::Ref<const Eigen::VectorXd>& x);
  void merge(const RunningGaussian& other);

  long count() const noexcept { return n_; }
  int dim() const noexcept { return static_cast<int>(mean_.size()); }
  /// Throws when fewer than two samples were added.
  GaussianStats stats() const;

 private:
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

/// Maps a batch of images to a [N, dim] feature matrix.
struct FeatureExtractor {
  std::string id;
  int dim = 0;
  std::function<Eigen::MatrixXd(const std::vector<const Image*>&)> extract;
};

/// Statistics of the rows of `features`, accumulated in chunks of `chunk`
/// rows that are merged pairwise. Throws on < 2 rows or a non-finite entry
/// (naming the row).
GaussianStats stats_from_features(const Eigen::MatrixXd& features, int chunk = 64);
GaussianStats accumulate_stats(const FeatureExtractor& extractor, const std::vector<const Image*>& images,
                               int chunk = 64);

/// Principal square root of a symmetric PSD matrix by eigendecomposition.
/// Eigenvalues in (-1e-8, 0) are clipped to 0; anything lower throws
/// NumericalError.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

/// ||mu_r - mu_s||^2 + Tr(S_r + S_s - 2 sqrt(S_r S_s)), with the trace of the
/// square root taken through the symmetric form S_r^{1/2} S_s S_r^{1/2}.
double fid(const GaussianStats& real, const GaussianStats& synthetic);

struct FidDomainResult {
  std::string domain;
  std::vector<double> values;  // one per bootstrap resample
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single resample
};

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  long count = 0;
};

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins = 10);

/// For each domain, compares `bootstrap` random subsets of `subset_size`
/// synthetic feature rows (drawn without replacement, kept in input order)
/// against the statistics of the full real set.
std::vector<FidDomainResult> fid_distribution(const std::vector<std::string>& domains,
                                              const std::vector<Eigen::MatrixXd>& real_features,
                                              const std::vector<Eigen::MatrixXd>& synthetic_features, int bootstrap,
                                              int subset_size, std::uint64_t seed);

/// Same, extracting features from images first.
std::vector<FidDomainResult> fid_distribution(const FeatureExtractor& extractor, const std::vector<std::string>& domains,
                                              const std::vector<std::vector<const Image*>>& real_sets,
                                              const std::vector<std::vector<const Image*>>& synthetic_sets,
                                              int bootstrap, int subset_size, std::uint64_t seed);

/// Largest FID between two disjoint random halves of a real feature set over
/// `resamples` draws: the self-comparison noise floor at half-set size.
double fid_noise_floor(const Eigen::MatrixXd& real_features, int resamples, std::uint64_t seed);

/// Writes `fid_report.csv` (`domain,mean_fid,std_fid,n_bootstrap`) and one
/// `fid_hist_<domain>.csv` (`bin_left,bin_right,count`) per domain.
void write_fid_report(const std::filesystem::path& dir, const std::vector<FidDomainResult>& results);

/// Rows of a [N,F] tensor as an Eigen matrix.
Eigen::MatrixXd to_matrix(const Tensor& t);

/// Penultimate-layer features of a trained classifier.
FeatureExtractor classifier_extractor(std::shared_ptr<const TrainedClassifier> classifier);

}  // namespace citgan
