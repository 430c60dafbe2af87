#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dlmut {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

/// Dense row-major float32 tensor. Shape dimensions are positive; a
/// default-constructed tensor is the empty placeholder used by
/// parameterless layers.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }
  const float* data() const noexcept { return data_.data(); }
  float* data() noexcept { return data_.data(); }

  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }

  /// Same shape, same data; values are compared by bit pattern so that
  /// -0.0 != +0.0 and NaN payloads are significant.
  bool bitwise_equal(const Tensor& other) const noexcept;

  bool all_finite() const noexcept;

  /// Reinterprets the data under a new shape with the same element count.
  Tensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace dlmut
