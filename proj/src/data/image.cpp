#include "citgan/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "citgan/core/errors.hpp"

namespace citgan {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c, fill) {}

Interpolation parse_interpolation(const std::string& text) {
  if (text == "bilinear") return Interpolation::Bilinear;
  if (text == "nearest") return Interpolation::Nearest;
  if (text == "area") return Interpolation::Area;
  throw ConfigError("unknown interpolation '" + text + "' (expected bilinear, nearest or area)");
}

std::string to_string(Interpolation interp) {
  switch (interp) {
    case Interpolation::Bilinear: return "bilinear";
    case Interpolation::Nearest: return "nearest";
    case Interpolation::Area: return "area";
  }
  return "bilinear";
}

std::optional<Image> read_image(const std::filesystem::path& path, int channels, int resolution,
                                Interpolation interp) {
  CITGAN_REQUIRE(channels == 1 || channels == 3, "only 1- or 3-channel images are supported");
  cv::Mat m;
  try {
    m = cv::imread(path.string(), channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    return std::nullopt;
  }
  if (m.empty()) return std::nullopt;
  if (m.rows != resolution || m.cols != resolution) {
    const int flag = interp == Interpolation::Nearest ? cv::INTER_NEAREST
                     : interp == Interpolation::Area  ? cv::INTER_AREA
                                                      : cv::INTER_LINEAR;
    cv::Mat resized;
    cv::resize(m, resized, cv::Size(resolution, resolution), 0, 0, flag);
    m = resized;
  }
  if (channels == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
  Image img(resolution, resolution, channels);
  for (int y = 0; y < resolution; ++y) {
    const unsigned char* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < resolution * channels; ++x)
      img.pixels[static_cast<std::size_t>(y) * resolution * channels + x] = row[x] / 255.0;
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  CITGAN_REQUIRE(image.channels == 1 || image.channels == 3, "only 1- or 3-channel images can be written");
  cv::Mat m(image.height, image.width, image.channels == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    unsigned char* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < image.width * image.channels; ++x) {
      const double v = std::clamp(image.pixels[static_cast<std::size_t>(y) * image.width * image.channels + x], 0.0, 1.0);
      row[x] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  if (image.channels == 3) cv::cvtColor(m, m, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m)) throw Error("failed to write image " + path.string());
}

Tensor to_network_batch(const std::vector<const Image*>& images) {
  CITGAN_REQUIRE(!images.empty(), "to_network_batch: empty image list");
  const int h = images[0]->height, w = images[0]->width, c = images[0]->channels;
  const int n = static_cast<int>(images.size());
  Tensor t({n, c, h, w});
  for (int i = 0; i < n; ++i) {
    const Image& img = *images[i];
    CITGAN_REQUIRE(img.height == h && img.width == w && img.channels == c, "to_network_batch: image sizes differ");
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) t.at(i, ch, y, x) = 2.0 * img.at(y, x, ch) - 1.0;
  }
  return t;
}

Image from_network_batch(const Tensor& batch, int n) {
  CITGAN_REQUIRE(batch.rank() == 4 && n >= 0 && n < batch.dim(0), "from_network_batch: bad batch index");
  const int c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  Image img(h, w, c);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(y, x, ch) = std::clamp(0.5 * (batch.at(n, ch, y, x) + 1.0), 0.0, 1.0);
  return img;
}

}  // namespace citgan
