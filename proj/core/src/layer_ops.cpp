#include "dlmut/layer_ops.hpp"

#include <algorithm>
#include <cmath>

#include "dlmut/error.hpp"
#include "internal/kernels.hpp"

namespace dlmut {

namespace detail {

void dense(const float* w, const float* b, const float* x, float* y, std::size_t in, std::size_t out) noexcept {
  for (std::size_t o = 0; o < out; ++o) {
    const float* row = w + o * in;
    // Four fixed lanes keep the summation order deterministic.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= in; i += 4) {
      s0 += double(row[i]) * double(x[i]);
      s1 += double(row[i + 1]) * double(x[i + 1]);
      s2 += double(row[i + 2]) * double(x[i + 2]);
      s3 += double(row[i + 3]) * double(x[i + 3]);
    }
    for (; i < in; ++i) s0 += double(row[i]) * double(x[i]);
    y[o] = static_cast<float>(((s0 + s1) + (s2 + s3)) + double(b[o]));
  }
}

void conv2d(const float* k, const float* b, const float* x, float* y, std::size_t in_ch, std::size_t h,
            std::size_t w, std::size_t out_ch, std::size_t kh, std::size_t kw) noexcept {
  const std::size_t oh = h - kh + 1;
  const std::size_t ow = w - kw + 1;
  for (std::size_t o = 0; o < out_ch; ++o) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        double acc = 0.0;
        for (std::size_t ic = 0; ic < in_ch; ++ic) {
          const float* kern = k + ((o * in_ch + ic) * kh) * kw;
          const float* img = x + (ic * h + r) * w + c;
          for (std::size_t u = 0; u < kh; ++u) {
            for (std::size_t v = 0; v < kw; ++v) acc += double(kern[u * kw + v]) * double(img[u * w + v]);
          }
        }
        y[(o * oh + r) * ow + c] = static_cast<float>(acc + double(b[o]));
      }
    }
  }
}

void maxpool(const float* x, float* y, std::size_t ch, std::size_t h, std::size_t w) noexcept {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t col = 0; col < ow; ++col) {
        const float* p = x + (c * h + 2 * r) * w + 2 * col;
        y[(c * oh + r) * ow + col] = std::max(std::max(p[0], p[1]), std::max(p[w], p[w + 1]));
      }
    }
  }
}

void activate(Activation fn, float* v, std::size_t n) noexcept {
  switch (fn) {
    case Activation::kIdentity: return;
    case Activation::kRelu:
      for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0f ? v[i] : 0.0f;
      return;
    case Activation::kSoftmax: {
      float peak = v[0];
      for (std::size_t i = 1; i < n; ++i) peak = std::max(peak, v[i]);
      double total = 0.0;
      std::vector<double> e(n);
      for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(double(v[i]) - double(peak));
        total += e[i];
      }
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(e[i] / total);
      return;
    }
  }
}

void run_layer(const LayerSpec& layer, const LayerParams& p, const Shape& in_shape, const float* x, float* y) noexcept {
  switch (layer.kind) {
    case LayerKind::kDense:
      dense(p.weight.data(), p.bias.data(), x, y, layer.in, layer.out);
      break;
    case LayerKind::kConv2D:
      conv2d(p.weight.data(), p.bias.data(), x, y, layer.in, in_shape[1], in_shape[2], layer.out, layer.kernel_h,
             layer.kernel_w);
      break;
    case LayerKind::kMaxPool2x2:
      maxpool(x, y, in_shape[0], in_shape[1], in_shape[2]);
      break;
    case LayerKind::kFlatten:
    case LayerKind::kActivation:
      std::copy_n(x, shape_size(in_shape), y);
      break;
  }
}

}  // namespace detail

Tensor dense_forward(const Tensor& weight, const Tensor& bias, const Tensor& x) {
  if (weight.rank() != 2 || bias.shape() != Shape{weight.shape()[0]} || x.shape() != Shape{weight.shape()[1]}) {
    throw Error(ErrorKind::kShapeMismatch, "dense_forward: weight " + shape_string(weight.shape()) + ", bias " +
                                               shape_string(bias.shape()) + ", input " + shape_string(x.shape()));
  }
  Tensor y(Shape{weight.shape()[0]});
  detail::dense(weight.data(), bias.data(), x.data(), y.data(), weight.shape()[1], weight.shape()[0]);
  return y;
}

Tensor conv2d_forward(const Tensor& kernels, const Tensor& bias, const Tensor& image) {
  if (kernels.rank() != 4 || image.rank() != 3 || bias.shape() != Shape{kernels.shape()[0]} ||
      kernels.shape()[1] != image.shape()[0]) {
    throw Error(ErrorKind::kShapeMismatch, "conv2d_forward: kernels " + shape_string(kernels.shape()) + ", bias " +
                                               shape_string(bias.shape()) + ", image " + shape_string(image.shape()));
  }
  const auto& ks = kernels.shape();
  const auto& is = image.shape();
  if (ks[2] > is[1] || ks[3] > is[2]) {
    throw Error(ErrorKind::kShapeMismatch,
                "conv2d_forward: kernel " + shape_string(ks) + " larger than image " + shape_string(is));
  }
  Tensor y(Shape{ks[0], is[1] - ks[2] + 1, is[2] - ks[3] + 1});
  detail::conv2d(kernels.data(), bias.data(), image.data(), y.data(), ks[1], is[1], is[2], ks[0], ks[2], ks[3]);
  return y;
}

Tensor maxpool2x2(const Tensor& feature_map) {
  const auto& s = feature_map.shape();
  if (s.size() != 3 || s[1] % 2 != 0 || s[2] % 2 != 0) {
    throw Error(ErrorKind::kShapeMismatch, "maxpool2x2 needs [C,H,W] with even H and W, got " + shape_string(s));
  }
  Tensor y(Shape{s[0], s[1] / 2, s[2] / 2});
  detail::maxpool(feature_map.data(), y.data(), s[0], s[1], s[2]);
  return y;
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1) throw Error(ErrorKind::kShapeMismatch, "softmax expects a vector, got " + shape_string(logits.shape()));
  Tensor y = logits;
  detail::activate(Activation::kSoftmax, y.data(), y.size());
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  detail::activate(Activation::kRelu, y.data(), y.size());
  return y;
}

void apply_activation(Activation fn, std::span<float> values) {
  if (values.empty()) return;
  detail::activate(fn, values.data(), values.size());
}

std::size_t argmax(std::span<const float> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<LayerTrace> trace(const TrainedModel& model, std::span<const float> sample) {
  const auto& shapes = model.shapes();
  if (sample.size() != shape_size(shapes[0])) {
    throw Error(ErrorKind::kShapeMismatch, "sample has " + std::to_string(sample.size()) + " values, model expects " +
                                               shape_string(shapes[0]));
  }
  const auto& layers = model.spec().layers;
  std::vector<LayerTrace> out(layers.size());
  std::vector<float> input(sample.begin(), sample.end());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& t = out[i];
    t.pre.resize(shape_size(shapes[i + 1]));
    detail::run_layer(layers[i], model.params(i), shapes[i], input.data(), t.pre.data());
    t.post = t.pre;
    if (layers[i].carries_activation()) detail::activate(layers[i].activation, t.post.data(), t.post.size());
    input = t.post;
  }
  return out;
}

namespace {

std::size_t batch_count(const TrainedModel& model, const Tensor& batch) {
  const auto& in = model.shapes()[0];
  const auto& s = batch.shape();
  if (s == in) return 1;
  if (s.size() == in.size() + 1 && std::equal(in.begin(), in.end(), s.begin() + 1)) return s[0];
  throw Error(ErrorKind::kShapeMismatch,
              "batch " + shape_string(s) + " does not match model input " + shape_string(in));
}

}  // namespace

Tensor forward(const TrainedModel& model, const Tensor& batch) {
  const std::size_t n = batch_count(model, batch);
  const std::size_t stride = shape_size(model.shapes()[0]);
  const std::size_t k = model.num_classes();
  Tensor out(Shape{n, k});
  Evaluator eval(model);
  for (std::size_t i = 0; i < n; ++i) {
    auto probs = eval.probabilities(batch.values().subspan(i * stride, stride));
    std::copy(probs.begin(), probs.end(), out.data() + i * k);
  }
  return out;
}

std::vector<int> predict(const TrainedModel& model, const Tensor& batch) {
  const std::size_t n = batch_count(model, batch);
  const std::size_t stride = shape_size(model.shapes()[0]);
  std::vector<int> labels(n);
  Evaluator eval(model);
  for (std::size_t i = 0; i < n; ++i) labels[i] = eval.predict(batch.values().subspan(i * stride, stride));
  return labels;
}

Evaluator::Evaluator(const TrainedModel& model) : model_(model) {
  std::size_t widest = 0;
  for (const auto& s : model.shapes()) widest = std::max(widest, shape_size(s));
  a_.resize(widest);
  b_.resize(widest);
}

std::span<const float> Evaluator::probabilities(std::span<const float> sample) {
  const auto& shapes = model_.shapes();
  const auto& layers = model_.spec().layers;
  std::copy(sample.begin(), sample.end(), a_.begin());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    detail::run_layer(layers[i], model_.params(i), shapes[i], a_.data(), b_.data());
    if (layers[i].carries_activation()) detail::activate(layers[i].activation, b_.data(), shape_size(shapes[i + 1]));
    std::swap(a_, b_);
  }
  return std::span<const float>(a_.data(), model_.num_classes());
}

int Evaluator::predict(std::span<const float> sample) {
  return static_cast<int>(argmax(probabilities(sample)));
}

}  // namespace dlmut
