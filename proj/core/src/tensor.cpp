#include "dlmut/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "dlmut/error.hpp"

namespace dlmut {

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_dims(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorKind::kShapeMismatch, "tensor shape has no dimensions");
  for (auto d : shape) {
    if (d == 0) throw Error(ErrorKind::kShapeMismatch, "zero dimension in " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_size(shape_), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw Error(ErrorKind::kShapeMismatch, "shape " + shape_string(shape_) + " needs " +
                                               std::to_string(shape_size(shape_)) + " values, got " +
                                               std::to_string(data_.size()));
  }
}

bool Tensor::bitwise_equal(const Tensor& other) const noexcept {
  return shape_ == other.shape_ && data_.size() == other.data_.size() &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0);
}

bool Tensor::all_finite() const noexcept {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

}  // namespace dlmut
