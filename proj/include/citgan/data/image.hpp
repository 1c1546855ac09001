#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "citgan/core/tensor.hpp"

namespace citgan {

/// Channel-last image with values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int y, int x, int c = 0) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int y, int x, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

enum class Interpolation { Bilinear, Nearest, Area };

Interpolation parse_interpolation(const std::string& text);
std::string to_string(Interpolation interp);

/// Decodes an image file, converting to `channels` and resizing to
/// resolution x resolution. Returns nullopt when the file cannot be decoded.
std::optional<Image> read_image(const std::filesystem::path& path, int channels, int resolution,
                                Interpolation interp = Interpolation::Bilinear);

/// Writes an 8-bit PNG (values are clamped to [0,1] and rounded).
void write_png(const std::filesystem::path& path, const Image& image);

/// Stacks images into an [N,C,H,W] tensor mapped from [0,1] to [-1,1].
Tensor to_network_batch(const std::vector<const Image*>& images);
/// Inverse of to_network_batch for sample n, clamped to [0,1].
Image from_network_batch(const Tensor& batch, int n);

}  // namespace citgan
