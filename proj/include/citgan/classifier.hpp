#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "citgan/data/domains.hpp"
#include "citgan/networks.hpp"

namespace citgan {

struct ClassifierConfig {
  long steps = 600;
  int batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  NetworkConfig network;  // resolution/channels/widths; num_domains unused
};

/// A ConvClassifier plus the label names of its outputs. With a single output
/// the classifier is binary and its sigmoid is the score of `labels[0]`.
struct TrainedClassifier {
  ConvClassifier net;
  std::vector<std::string> labels;
  std::string id;
};

/// Trains on (image, label) pairs with Adam. `num_classes` == 1 selects a
/// binary sigmoid objective with labels in {0,1}; otherwise softmax
/// cross-entropy over labels 0..num_classes-1. Minibatches are sampled with
/// replacement from a seeded RNG, so equal inputs give equal weights.
ConvClassifier train_classifier(const std::vector<const Image*>& images, const std::vector<int>& labels,
                                int num_classes, const ClassifierConfig& config);

/// Logits for every image, evaluated in chunks: [N, outputs].
Tensor classifier_logits(const ConvClassifier& net, const std::vector<const Image*>& images, int chunk = 64);
/// Pooled trunk features for every image: [N, feature_dim].
Tensor classifier_features(const ConvClassifier& net, const std::vector<const Image*>& images, int chunk = 64);
/// argmax of logits per image.
std::vector<int> classifier_predict(const ConvClassifier& net, const std::vector<const Image*>& images);

void save_classifier(const std::filesystem::path& path, const TrainedClassifier& classifier);
TrainedClassifier load_classifier(const std::filesystem::path& path);

std::vector<const Image*> image_refs(const std::vector<ImageSample>& samples);

}  // namespace citgan
