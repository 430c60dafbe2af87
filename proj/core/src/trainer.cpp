#include "dlmut/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dlmut/error.hpp"
#include "dlmut/layer_ops.hpp"
#include "dlmut/rng.hpp"
#include "internal/kernels.hpp"

namespace dlmut {

void TrainConfig::validate(std::size_t dataset_size) const {
  if (batch_size == 0) throw Error(ErrorKind::kConfig, "batch_size must be positive");
  if (batch_size > dataset_size) {
    throw Error(ErrorKind::kConfig, "batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                                        std::to_string(dataset_size));
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::kConfig, "learning_rate must be positive");
  }
}

TrainedModel initialize(const ModelSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng = make_rng(seed, "init");
  std::vector<LayerParams> params;
  params.reserve(spec.layers.size());
  for (const auto& layer : spec.layers) {
    if (!layer.has_params()) {
      params.emplace_back();
      continue;
    }
    const double receptive = layer.kind == LayerKind::kConv2D ? double(layer.kernel_h * layer.kernel_w) : 1.0;
    const double fan_in = double(layer.in) * receptive;
    const double fan_out = double(layer.out) * receptive;
    const auto limit = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));
    std::uniform_real_distribution<float> dist(-limit, limit);
    Tensor w(layer.weight_shape());
    for (float& v : w.values()) v = dist(rng);
    params.push_back({std::move(w), Tensor(layer.bias_shape())});
  }
  return TrainedModel(spec, std::move(params));
}

namespace {

/// Forward/backward scratch space. Shapes come from `model`, values from
/// `params`, which the trainer updates between batches. Gradients
/// accumulate in double across the samples of a batch.
class Backprop {
 public:
  Backprop(const TrainedModel& model, const std::vector<LayerParams>& params) : model_(model), params_(params) {
    const auto& shapes = model.shapes();
    const auto n = model.spec().layers.size();
    acts_.resize(n + 1);
    pre_.resize(n);
    for (std::size_t i = 0; i <= n; ++i) acts_[i].resize(shape_size(shapes[i]));
    for (std::size_t i = 0; i < n; ++i) pre_[i].resize(shape_size(shapes[i + 1]));
    std::size_t widest = 0;
    for (const auto& s : shapes) widest = std::max(widest, shape_size(s));
    g_out_.resize(widest);
    g_in_.resize(widest);
    gw_.resize(n);
    gb_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& layer = model.spec().layers[i];
      if (!layer.has_params()) continue;
      gw_[i].assign(shape_size(layer.weight_shape()), 0.0);
      gb_[i].assign(layer.out, 0.0);
    }
  }

  void reset() {
    for (auto& g : gw_) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : gb_) std::fill(g.begin(), g.end(), 0.0);
  }

  /// Accumulates gradients for one sample; returns its loss and whether the
  /// prediction was correct.
  std::pair<double, bool> accumulate(std::span<const float> sample, int label) {
    const auto& layers = model_.spec().layers;
    const auto& shapes = model_.shapes();
    const std::size_t n = layers.size();
    std::copy(sample.begin(), sample.end(), acts_[0].begin());
    for (std::size_t i = 0; i < n; ++i) {
      detail::run_layer(layers[i], params_[i], shapes[i], acts_[i].data(), pre_[i].data());
      std::copy(pre_[i].begin(), pre_[i].end(), acts_[i + 1].begin());
      if (layers[i].carries_activation()) detail::activate(layers[i].activation, acts_[i + 1].data(), acts_[i + 1].size());
    }

    // The final layer applies softmax, so its pre values are the logits.
    const auto& logits = pre_[n - 1];
    const std::size_t k = logits.size();
    double peak = logits[0];
    for (float z : logits) peak = std::max(peak, double(z));
    double total = 0.0;
    for (float z : logits) total += std::exp(double(z) - peak);
    const double log_norm = peak + std::log(total);
    const double loss = log_norm - double(logits[static_cast<std::size_t>(label)]);
    for (std::size_t c = 0; c < k; ++c) {
      g_out_[c] = std::exp(double(logits[c]) - log_norm) - (static_cast<int>(c) == label ? 1.0 : 0.0);
    }
    const bool correct = static_cast<int>(argmax(acts_[n])) == label;

    // g_out_ holds dL/d(pre) for the final layer, dL/d(post) elsewhere.
    for (std::size_t li = n; li-- > 0;) {
      const auto& layer = layers[li];
      const auto& pre = pre_[li];
      const std::size_t out_size = pre.size();
      if (li != n - 1 && layer.carries_activation() && layer.activation == Activation::kRelu) {
        for (std::size_t j = 0; j < out_size; ++j) {
          if (!(pre[j] > 0.0f)) g_out_[j] = 0.0;
        }
      }
      const bool need_input_grad = li > 0;
      const std::size_t in_size = acts_[li].size();
      const float* x = acts_[li].data();
      switch (layer.kind) {
        case LayerKind::kDense: {
          const float* w = params_[li].weight.data();
          auto& gw = gw_[li];
          auto& gb = gb_[li];
          if (need_input_grad) std::fill_n(g_in_.begin(), in_size, 0.0);
          for (std::size_t o = 0; o < out_size; ++o) {
            const double go = g_out_[o];
            if (go == 0.0) continue;
            gb[o] += go;
            double* grow = gw.data() + o * in_size;
            for (std::size_t i = 0; i < in_size; ++i) grow[i] += go * double(x[i]);
            if (need_input_grad) {
              const float* wrow = w + o * in_size;
              for (std::size_t i = 0; i < in_size; ++i) g_in_[i] += go * double(wrow[i]);
            }
          }
          break;
        }
        case LayerKind::kConv2D: {
          const auto& in_shape = shapes[li];
          const std::size_t ic_n = layer.in, h = in_shape[1], wd = in_shape[2];
          const std::size_t kh = layer.kernel_h, kw = layer.kernel_w;
          const std::size_t oh = h - kh + 1, ow = wd - kw + 1;
          const float* w = params_[li].weight.data();
          auto& gw = gw_[li];
          auto& gb = gb_[li];
          if (need_input_grad) std::fill_n(g_in_.begin(), in_size, 0.0);
          for (std::size_t o = 0; o < layer.out; ++o) {
            for (std::size_t r = 0; r < oh; ++r) {
              for (std::size_t c = 0; c < ow; ++c) {
                const double go = g_out_[(o * oh + r) * ow + c];
                if (go == 0.0) continue;
                gb[o] += go;
                for (std::size_t ic = 0; ic < ic_n; ++ic) {
                  const std::size_t kbase = ((o * ic_n + ic) * kh) * kw;
                  for (std::size_t u = 0; u < kh; ++u) {
                    for (std::size_t v = 0; v < kw; ++v) {
                      const std::size_t xi = (ic * h + r + u) * wd + c + v;
                      gw[kbase + u * kw + v] += go * double(x[xi]);
                      if (need_input_grad) g_in_[xi] += go * double(w[kbase + u * kw + v]);
                    }
                  }
                }
              }
            }
          }
          break;
        }
        case LayerKind::kMaxPool2x2: {
          if (!need_input_grad) break;
          const auto& in_shape = shapes[li];
          const std::size_t ch = in_shape[0], h = in_shape[1], wd = in_shape[2];
          const std::size_t oh = h / 2, ow = wd / 2;
          std::fill_n(g_in_.begin(), in_size, 0.0);
          for (std::size_t c = 0; c < ch; ++c) {
            for (std::size_t r = 0; r < oh; ++r) {
              for (std::size_t col = 0; col < ow; ++col) {
                const std::size_t base = (c * h + 2 * r) * wd + 2 * col;
                const std::size_t cand[4] = {base, base + 1, base + wd, base + wd + 1};
                std::size_t best = cand[0];
                for (auto idx : cand) {
                  if (x[idx] > x[best]) best = idx;
                }
                g_in_[best] += g_out_[(c * oh + r) * ow + col];
              }
            }
          }
          break;
        }
        case LayerKind::kFlatten:
        case LayerKind::kActivation:
          if (need_input_grad) std::copy_n(g_out_.begin(), in_size, g_in_.begin());
          break;
      }
      if (need_input_grad) std::swap(g_out_, g_in_);
    }
    return {loss, correct};
  }

  std::vector<LayerParams> mean_grads(std::size_t count) const {
    std::vector<LayerParams> out(model_.spec().layers.size());
    const double scale = 1.0 / double(count);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& layer = model_.spec().layers[i];
      if (!layer.has_params()) continue;
      Tensor w(layer.weight_shape());
      Tensor b(layer.bias_shape());
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = static_cast<float>(gw_[i][j] * scale);
      for (std::size_t j = 0; j < b.size(); ++j) b[j] = static_cast<float>(gb_[i][j] * scale);
      out[i] = {std::move(w), std::move(b)};
    }
    return out;
  }

  /// In-place SGD update of `params` from the accumulated batch gradient.
  void apply(std::vector<LayerParams>& params, std::size_t count, double lr) const {
    const double step = lr / double(count);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (gw_[i].empty()) continue;
      auto w = params[i].weight.values();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = static_cast<float>(double(w[j]) - step * gw_[i][j]);
      auto b = params[i].bias.values();
      for (std::size_t j = 0; j < b.size(); ++j) b[j] = static_cast<float>(double(b[j]) - step * gb_[i][j]);
    }
  }

 private:
  const TrainedModel& model_;
  const std::vector<LayerParams>& params_;
  std::vector<std::vector<float>> acts_;
  std::vector<std::vector<float>> pre_;
  std::vector<double> g_out_;
  std::vector<double> g_in_;
  std::vector<std::vector<double>> gw_;
  std::vector<std::vector<double>> gb_;
};

void check_inputs(const TrainedModel& model, const Shape& sample_shape, std::span<const int> labels) {
  if (sample_shape != model.shapes()[0]) {
    throw Error(ErrorKind::kShapeMismatch,
                "samples " + shape_string(sample_shape) + " vs model input " + shape_string(model.shapes()[0]));
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= model.num_classes()) {
      throw Error(ErrorKind::kInvalidArgument, "label " + std::to_string(l) + " outside model classes");
    }
  }
}

}  // namespace

LossAndGrads loss_and_grads(const TrainedModel& model, const Tensor& batch, std::span<const int> labels) {
  if (batch.rank() < 2 || batch.shape()[0] != labels.size() || labels.empty()) {
    throw Error(ErrorKind::kShapeMismatch, "batch " + shape_string(batch.shape()) + " with " +
                                               std::to_string(labels.size()) + " labels");
  }
  check_inputs(model, Shape(batch.shape().begin() + 1, batch.shape().end()), labels);
  Backprop bp(model, model.params());
  const std::size_t stride = batch.size() / labels.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    loss += bp.accumulate(batch.values().subspan(i * stride, stride), labels[i]).first;
  }
  return {loss / double(labels.size()), bp.mean_grads(labels.size())};
}

TrainedModel sgd_step(const TrainedModel& model, const std::vector<LayerParams>& grads, double learning_rate) {
  if (grads.size() != model.params().size()) throw Error(ErrorKind::kShapeMismatch, "gradient layout does not match model");
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!model.spec().layers[i].has_params()) continue;
    if (grads[i].weight.shape() != params[i].weight.shape() || grads[i].bias.shape() != params[i].bias.shape()) {
      throw Error(ErrorKind::kShapeMismatch, "gradient shape mismatch at layer " + std::to_string(i));
    }
    auto w = params[i].weight.values();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = static_cast<float>(double(w[j]) - learning_rate * grads[i].weight[j]);
    auto b = params[i].bias.values();
    for (std::size_t j = 0; j < b.size(); ++j) b[j] = static_cast<float>(double(b[j]) - learning_rate * grads[i].bias[j]);
  }
  return TrainedModel(model.spec(), std::move(params));
}

TrainedModel train(const ModelSpec& spec, const Dataset& data, const TrainConfig& cfg, const TrainLogger& log) {
  data.validate();
  cfg.validate(data.size());
  TrainedModel model = initialize(spec, cfg.seed);
  check_inputs(model, data.sample_shape(), data.labels);
  if (cfg.epochs == 0) return model;

  auto params = model.params();
  Rng shuffle_rng = make_rng(cfg.seed, "shuffle");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Backprop bp(model, params);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      bp.reset();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        auto [loss, ok] = bp.accumulate(data.sample(order[k]), data.labels[order[k]]);
        batch_loss += loss;
        correct += ok ? 1 : 0;
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::kDivergence, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                                std::to_string(batch_index));
      }
      epoch_loss += batch_loss;
      bp.apply(params, end - start, cfg.learning_rate);
      for (const auto& p : params) {
        if (!p.weight.all_finite() || !p.bias.all_finite()) {
          throw Error(ErrorKind::kDivergence, "non-finite parameter at epoch " + std::to_string(epoch) + ", batch " +
                                                  std::to_string(batch_index));
        }
      }
    }
    if (log) log({epoch, epoch_loss / double(data.size()), double(correct) / double(data.size())});
  }
  return TrainedModel(spec, std::move(params));
}

double evaluate_accuracy(const TrainedModel& model, const Dataset& data) {
  if (data.empty()) throw Error(ErrorKind::kEmptyDataset, "accuracy of an empty dataset");
  check_inputs(model, data.sample_shape(), data.labels);
  Evaluator eval(model);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += eval.predict(data.sample(i)) == data.labels[i] ? 1 : 0;
  return double(correct) / double(data.size());
}

}  // namespace dlmut
