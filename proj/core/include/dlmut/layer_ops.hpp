#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dlmut/model.hpp"
#include "dlmut/tensor.hpp"

namespace dlmut {

/// y = W x + b with W [out, in], b [out], x [in]. Products are accumulated
/// in double.
Tensor dense_forward(const Tensor& weight, const Tensor& bias, const Tensor& x);

/// Valid-padding, stride-1 cross-correlation. kernels [O, I, kh, kw],
/// bias [O], image [I, H, W] -> [O, H-kh+1, W-kw+1].
Tensor conv2d_forward(const Tensor& kernels, const Tensor& bias, const Tensor& image);

/// [C, H, W] -> [C, H/2, W/2]; H and W must be even.
Tensor maxpool2x2(const Tensor& feature_map);

/// Max-shifted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& logits);

Tensor relu(const Tensor& x);

/// Applies an activation in place. Softmax treats the whole span as one
/// distribution.
void apply_activation(Activation fn, std::span<float> values);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const float> values) noexcept;

/// Per-layer intermediate values for a single sample. For Dense/Conv2D
/// `pre` is the affine output before the activation attribute; for other
/// layers it is the layer input.
struct LayerTrace {
  std::vector<float> pre;
  std::vector<float> post;
};

std::vector<LayerTrace> trace(const TrainedModel& model, std::span<const float> sample);

/// Class probabilities for a batch shaped [N, input_shape...] (a single
/// sample shaped exactly input_shape is accepted as N=1). Returns [N, K].
Tensor forward(const TrainedModel& model, const Tensor& batch);

/// Argmax of each forward() row.
std::vector<int> predict(const TrainedModel& model, const Tensor& batch);

/// Runs one sample through the model, writing num_classes probabilities.
/// Scratch buffers are reused across calls; not thread-safe per instance.
class Evaluator {
 public:
  explicit Evaluator(const TrainedModel& model);

  std::span<const float> probabilities(std::span<const float> sample);
  int predict(std::span<const float> sample);

 private:
  const TrainedModel& model_;
  std::vector<float> a_;
  std::vector<float> b_;
};

}  // namespace dlmut
