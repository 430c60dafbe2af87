#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dlmut/dataset.hpp"
#include "dlmut/model.hpp"

namespace dlmut {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;

  /// Throws kConfig when batch_size is 0 or exceeds the dataset, or the
  /// learning rate is not positive.
  void validate(std::size_t dataset_size) const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean cross-entropy over the epoch
  double accuracy = 0.0;  // running training accuracy during the epoch
};

using TrainLogger = std::function<void(const EpochLog&)>;

/// Glorot-uniform weights drawn from the "init" stream of `seed`; zero biases.
TrainedModel initialize(const ModelSpec& spec, std::uint64_t seed);

/// Plain mini-batch SGD on mean cross-entropy. Single-threaded and a pure
/// function of (spec, data, cfg): epoch shuffles use the "shuffle" stream
/// of cfg.seed, separate from initialization. Throws kDivergence (naming
/// epoch and batch) if the loss becomes non-finite.
TrainedModel train(const ModelSpec& spec, const Dataset& data, const TrainConfig& cfg, const TrainLogger& log = {});

struct LossAndGrads {
  double loss = 0.0;
  std::vector<LayerParams> grads;  // same layout as TrainedModel::params()
};

/// Mean cross-entropy of `batch` ([N, input...]) and its gradient with
/// respect to every parameter.
LossAndGrads loss_and_grads(const TrainedModel& model, const Tensor& batch, std::span<const int> labels);

/// params - learning_rate * grads.
TrainedModel sgd_step(const TrainedModel& model, const std::vector<LayerParams>& grads, double learning_rate);

/// Fraction of samples whose prediction equals the label. Throws
/// kEmptyDataset on empty data.
double evaluate_accuracy(const TrainedModel& model, const Dataset& data);

}  // namespace dlmut
