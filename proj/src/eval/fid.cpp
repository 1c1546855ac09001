#include "citgan/fid.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "citgan/core/errors.hpp"
#include "citgan/core/tensor.hpp"

namespace citgan {

namespace fs = std::filesystem;

RunningGaussian::RunningGaussian(int dim) : mean_(Eigen::VectorXd::Zero(dim)), scatter_(Eigen::MatrixXd::Zero(dim, dim)) {
  CITGAN_REQUIRE(dim >= 1, "feature dimension must be positive");
}

void RunningGaussian::add(const Eigen::Ref<const Eigen::VectorXd>& x) {
  CITGAN_REQUIRE(x.size() == mean_.size(), "feature dimension mismatch in accumulator");
  ++n_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  scatter_.noalias() += delta * (x - mean_).transpose();
}

void RunningGaussian::merge(const RunningGaussian& other) {
  CITGAN_REQUIRE(other.dim() == dim(), "feature dimension mismatch in merge");
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_), n = na + nb;
  const Eigen::VectorXd delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  scatter_ += other.scatter_;
  scatter_.noalias() += delta * delta.transpose() * (na * nb / n);
  n_ += other.n_;
}

GaussianStats RunningGaussian::stats() const {
  if (n_ < 2) throw NumericalError("covariance needs at least 2 samples, got " + std::to_string(n_));
  GaussianStats s;
  s.mu = mean_;
  s.sigma = scatter_ / static_cast<double>(n_ - 1);
  s.sigma = 0.5 * (s.sigma + s.sigma.transpose()).eval();
  s.n = n_;
  return s;
}

GaussianStats stats_from_features(const Eigen::MatrixXd& features, int chunk) {
  CITGAN_REQUIRE(chunk >= 1, "chunk size must be positive");
  const long n = features.rows();
  if (n < 2) throw NumericalError("FID statistics need at least 2 images, got " + std::to_string(n));
  for (long i = 0; i < n; ++i)
    if (!features.row(i).allFinite()) throw NumericalError("non-finite feature for image " + std::to_string(i));

  // Chunk partials are combined as a balanced pairwise tree.
  std::vector<RunningGaussian> parts;
  for (long start = 0; start < n; start += chunk) {
    RunningGaussian acc(static_cast<int>(features.cols()));
    for (long i = start; i < std::min(n, start + chunk); ++i) acc.add(features.row(i).transpose());
    parts.push_back(std::move(acc));
  }
  while (parts.size() > 1) {
    std::vector<RunningGaussian> next;
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      parts[i].merge(parts[i + 1]);
      next.push_back(std::move(parts[i]));
    }
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return parts.front().stats();
}

GaussianStats accumulate_stats(const FeatureExtractor& extractor, const std::vector<const Image*>& images, int chunk) {
  if (images.size() < 2) throw NumericalError("FID statistics need at least 2 images, got " + std::to_string(images.size()));
  Eigen::MatrixXd f = extractor.extract(images);
  CITGAN_REQUIRE(f.cols() == extractor.dim && f.rows() == static_cast<long>(images.size()),
                 "extractor '" + extractor.id + "' returned a matrix of the wrong shape");
  return stats_from_features(f, chunk);
}

namespace {

Eigen::VectorXd checked_eigenvalues(const Eigen::VectorXd& values, const char* what) {
  Eigen::VectorXd v = values;
  for (long i = 0; i < v.size(); ++i) {
    if (v[i] < -1e-8)
      throw NumericalError(std::string(what) + " has eigenvalue " + std::to_string(v[i]) + " below -1e-8");
    v[i] = std::max(v[i], 0.0);
  }
  return v;
}

}  // namespace

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  CITGAN_REQUIRE(m.rows() == m.cols(), "psd_sqrt needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd v = checked_eigenvalues(es.eigenvalues(), "covariance");
  return es.eigenvectors() * v.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double fid(const GaussianStats& r, const GaussianStats& s) {
  CITGAN_REQUIRE(r.mu.size() == s.mu.size() && r.sigma.rows() == s.sigma.rows() && r.sigma.cols() == r.mu.size() &&
                     s.sigma.cols() == s.mu.size(),
                 "fid: feature dimensions differ (" + std::to_string(r.mu.size()) + " vs " +
                     std::to_string(s.mu.size()) + ")");
  const Eigen::MatrixXd root_r = psd_sqrt(r.sigma);
  Eigen::MatrixXd inner = root_r * s.sigma * root_r;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd lambda = checked_eigenvalues(es.eigenvalues(), "sqrt(S_r) S_s sqrt(S_r)");
  const double trace_sqrt = lambda.cwiseSqrt().sum();
  const double mean_term = (r.mu - s.mu).squaredNorm();
  const double value = mean_term + r.sigma.trace() + s.sigma.trace() - 2.0 * trace_sqrt;
  return std::max(value, 0.0);
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
  CITGAN_REQUIRE(bins >= 1, "histogram needs at least one bin");
  if (values.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) return {{lo, hi, static_cast<long>(values.size())}};
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out;
  for (int b = 0; b < bins; ++b) out.push_back({lo + b * width, b + 1 == bins ? hi : lo + (b + 1) * width, 0});
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    out[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))].count++;
  }
  return out;
}

namespace {

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<long>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<long>(i)) = m.row(rows[i]);
  return out;
}

std::vector<int> sorted_subset(int n, int k, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<FidDomainResult> fid_distribution(const std::vector<std::string>& domains,
                                              const std::vector<Eigen::MatrixXd>& real_features,
                                              const std::vector<Eigen::MatrixXd>& synthetic_features, int bootstrap,
                                              int subset_size, std::uint64_t seed) {
  CITGAN_REQUIRE(domains.size() == real_features.size() && domains.size() == synthetic_features.size(),
                 "fid_distribution: one real and one synthetic set per domain");
  CITGAN_REQUIRE(bootstrap >= 1, "bootstrap count must be positive");
  CITGAN_REQUIRE(subset_size >= 2, "subset size must be at least 2");
  std::vector<FidDomainResult> out;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    const Eigen::MatrixXd& syn = synthetic_features[d];
    if (subset_size > syn.rows())
      throw ContractViolation("subset size " + std::to_string(subset_size) + " exceeds the " +
                              std::to_string(syn.rows()) + " synthetic images of domain '" + domains[d] + "'");
    const GaussianStats real = stats_from_features(real_features[d]);
    std::mt19937_64 rng(seed + d);
    FidDomainResult r;
    r.domain = domains[d];
    for (int b = 0; b < bootstrap; ++b) {
      const auto rows = sorted_subset(static_cast<int>(syn.rows()), subset_size, rng);
      r.values.push_back(fid(real, stats_from_features(select_rows(syn, rows))));
    }
    r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / r.values.size();
    if (r.values.size() > 1) {
      double ss = 0.0;
      for (double v : r.values) ss += (v - r.mean) * (v - r.mean);
      r.stddev = std::sqrt(ss / static_cast<double>(r.values.size() - 1));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<FidDomainResult> fid_distribution(const FeatureExtractor& extractor, const std::vector<std::string>& domains,
                                              const std::vector<std::vector<const Image*>>& real_sets,
                                              const std::vector<std::vector<const Image*>>& synthetic_sets,
                                              int bootstrap, int subset_size, std::uint64_t seed) {
  CITGAN_REQUIRE(domains.size() == real_sets.size() && domains.size() == synthetic_sets.size(),
                 "fid_distribution: one real and one synthetic set per domain");
  std::vector<Eigen::MatrixXd> real, syn;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    if (subset_size > static_cast<int>(synthetic_sets[d].size()))
      throw ContractViolation("subset size " + std::to_string(subset_size) + " exceeds the " +
                              std::to_string(synthetic_sets[d].size()) + " synthetic images of domain '" +
                              domains[d] + "'");
    real.push_back(extractor.extract(real_sets[d]));
    syn.push_back(extractor.extract(synthetic_sets[d]));
  }
  return fid_distribution(domains, real, syn, bootstrap, subset_size, seed);
}

double fid_noise_floor(const Eigen::MatrixXd& real_features, int resamples, std::uint64_t seed) {
  const int n = static_cast<int>(real_features.rows());
  CITGAN_REQUIRE(n >= 4, "noise floor needs at least 4 real images");
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int r = 0; r < resamples; ++r) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> a(idx.begin(), idx.begin() + n / 2), b(idx.begin() + n / 2, idx.end());
    worst = std::max(worst, fid(stats_from_features(select_rows(real_features, a)),
                                stats_from_features(select_rows(real_features, b))));
  }
  return worst;
}

void write_fid_report(const fs::path& dir, const std::vector<FidDomainResult>& results) {
  fs::create_directories(dir);
  std::ofstream report(dir / "fid_report.csv");
  report << "domain,mean_fid,std_fid,n_bootstrap\n";
  report.precision(10);
  for (const auto& r : results) {
    report << r.domain << ',' << r.mean << ',' << r.stddev << ',' << r.values.size() << '\n';
    std::ofstream hist(dir / ("fid_hist_" + r.domain + ".csv"));
    hist.precision(10);
    hist << "bin_left,bin_right,count\n";
    for (const auto& b : histogram(r.values)) hist << b.left << ',' << b.right << ',' << b.count << '\n';
  }
  if (!report) throw Error("failed writing " + (dir / "fid_report.csv").string());
}

Eigen::MatrixXd to_matrix(const Tensor& t) {
  CITGAN_REQUIRE(t.rank() == 2, "to_matrix needs a rank-2 tensor");
  Eigen::MatrixXd m(t.dim(0), t.dim(1));
  for (int i = 0; i < t.dim(0); ++i)
    for (int j = 0; j < t.dim(1); ++j) m(i, j) = t[static_cast<std::size_t>(i) * t.dim(1) + j];
  return m;
}

FeatureExtractor classifier_extractor(std::shared_ptr<const TrainedClassifier> classifier) {
  CITGAN_REQUIRE(classifier != nullptr, "null classifier");
  FeatureExtractor fx;
  fx.id = classifier->id.empty() ? "classifier" : classifier->id;
  fx.dim = classifier->net.feature_dim();
  fx.extract = [classifier](const std::vector<const Image*>& images) {
    return to_matrix(classifier_features(classifier->net, images));
  };
  return fx;
}

}  // namespace citgan
