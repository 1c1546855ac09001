#include "citgan/classifier.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "citgan/checkpoint.hpp"
#include "citgan/core/adam.hpp"
#include "citgan/core/errors.hpp"
#include "citgan/core/ops.hpp"

namespace citgan {

std::vector<const Image*> image_refs(const std::vector<ImageSample>& samples) {
  std::vector<const Image*> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(&s.pixels);
  return out;
}

ConvClassifier train_classifier(const std::vector<const Image*>& images, const std::vector<int>& labels,
                                int num_classes, const ClassifierConfig& config) {
  CITGAN_REQUIRE(!images.empty() && images.size() == labels.size(), "classifier training needs one label per image");
  CITGAN_REQUIRE(num_classes >= 1, "classifier needs at least one class");
  const int label_max = num_classes == 1 ? 1 : num_classes - 1;
  for (int l : labels) CITGAN_REQUIRE(l >= 0 && l <= label_max, "classifier label out of range");

  std::mt19937_64 rng(mix_seed(config.seed, 11));
  ConvClassifier net(config.network, num_classes, rng);
  Adam opt(net.params(), AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);

  for (long step = 0; step < config.steps; ++step) {
    std::vector<const Image*> batch;
    std::vector<int> target;
    for (int i = 0; i < config.batch_size; ++i) {
      const std::size_t k = pick(rng);
      batch.push_back(images[k]);
      target.push_back(labels[k]);
    }
    net.params().zero_grad();
    Var logits = net.logits(Var::constant(to_network_batch(batch)));
    Var loss;
    if (num_classes == 1) {
      // BCE with logits: softplus(z) - y z
      Tensor y({config.batch_size, 1});
      for (int i = 0; i < config.batch_size; ++i) y[static_cast<std::size_t>(i)] = target[static_cast<std::size_t>(i)];
      loss = ops::mean(ops::sub(ops::softplus(logits), ops::mul(logits, Var::constant(y))));
    } else {
      loss = ops::scale(ops::mean(ops::pick(ops::log_softmax(logits), target)), -1.0);
    }
    loss.backward();
    opt.step(net.params());
  }
  net.params().zero_grad();
  return net;
}

namespace {

template <typename F>
Tensor chunked(const std::vector<const Image*>& images, int width, int chunk, F&& eval) {
  const int n = static_cast<int>(images.size());
  Tensor out({n, width});
  NoGradGuard no_grad;
  for (int start = 0; start < n; start += chunk) {
    const int end = std::min(n, start + chunk);
    std::vector<const Image*> part(images.begin() + start, images.begin() + end);
    Var r = eval(Var::constant(to_network_batch(part)));
    std::copy(r.value().data(), r.value().data() + r.value().size(),
              out.data() + static_cast<std::size_t>(start) * width);
  }
  return out;
}

}  // namespace

Tensor classifier_logits(const ConvClassifier& net, const std::vector<const Image*>& images, int chunk) {
  return chunked(images, net.outputs(), chunk, [&](const Var& x) { return net.logits(x); });
}

Tensor classifier_features(const ConvClassifier& net, const std::vector<const Image*>& images, int chunk) {
  return chunked(images, net.feature_dim(), chunk, [&](const Var& x) { return net.features(x); });
}

std::vector<int> classifier_predict(const ConvClassifier& net, const std::vector<const Image*>& images) {
  const Tensor logits = classifier_logits(net, images);
  const int k = net.outputs();
  std::vector<int> out;
  for (int i = 0; i < logits.dim(0); ++i) {
    const double* row = logits.data() + static_cast<std::size_t>(i) * k;
    if (k == 1)
      out.push_back(row[0] > 0.0 ? 1 : 0);
    else
      out.push_back(static_cast<int>(std::max_element(row, row + k) - row));
  }
  return out;
}

void save_classifier(const std::filesystem::path& path, const TrainedClassifier& c) {
  CheckpointData data;
  data.metadata["kind"] = "classifier";
  data.metadata["id"] = c.id;
  data.metadata["outputs"] = std::to_string(c.net.outputs());
  std::string labels;
  for (std::size_t i = 0; i < c.labels.size(); ++i) labels += (i ? "," : "") + c.labels[i];
  data.metadata["labels"] = labels;
  put_network_config(data, c.net.config());
  put_params(data, "classifier", c.net.params());
  write_checkpoint_file(path, data);
}

TrainedClassifier load_classifier(const std::filesystem::path& path) {
  CheckpointData data = read_checkpoint_file(path);
  if (data.meta("kind") != "classifier")
    throw CheckpointError(path.string() + " holds a '" + data.meta("kind") + "', not a classifier");
  std::vector<std::string> labels;
  std::istringstream is(data.meta("labels"));
  for (std::string l; std::getline(is, l, ',');) labels.push_back(l);
  ConvClassifier net(take_network_config(data), std::stoi(data.meta("outputs")), take_params(data, "classifier"));
  return {std::move(net), std::move(labels), data.meta("id")};
}

}  // namespace citgan
