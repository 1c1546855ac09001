#include "citgan/core/tensor.hpp"

#include <sstream>

#include "citgan/core/errors.hpp"

namespace citgan {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    CITGAN_REQUIRE(d >= 0, "negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return shape.empty() ? 0 : n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
  CITGAN_REQUIRE(data_.size() == shape_size(shape_),
                 "tensor value count does not match shape " + citgan::shape_string(shape_));
}

int Tensor::dim(int i) const {
  CITGAN_REQUIRE(i >= 0 && i < rank(), "tensor dimension index out of range");
  return shape_[static_cast<std::size_t>(i)];
}

double& Tensor::at(int n, int c, int h, int w) {
  return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

double Tensor::at(int n, int c, int h, int w) const {
  return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  CITGAN_REQUIRE(shape_size(shape) == data_.size(),
                 "cannot reshape " + shape_string() + " to " + citgan::shape_string(shape));
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double Tensor::item() const {
  CITGAN_REQUIRE(data_.size() == 1, "item() on a tensor with " + std::to_string(data_.size()) + " elements");
  return data_[0];
}

std::string Tensor::shape_string() const { return citgan::shape_string(shape_); }

}  // namespace citgan
