#include <benchmark/benchmark.h>

#include <random>

#include "dlmut/analysis.hpp"
#include "dlmut/layer_ops.hpp"
#include "dlmut/model_mutators.hpp"
#include "dlmut/serialize.hpp"
#include "dlmut/trainer.hpp"

namespace {

using namespace dlmut;

// MNIST-shaped MLP and a batch of uniform noise images.
ModelSpec mnist_mlp() {
  return parse_architecture("flatten,dense:128:relu,dense:64:relu,dense:10:softmax", {1, 28, 28}, 10);
}

Dataset noise_data(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor x({n, 1, 28, 28});
  for (auto& v : x.values()) v = u(rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 10);
  return Dataset{std::move(x), std::move(labels), 10};
}

void BM_Forward(benchmark::State& state) {
  const auto model = initialize(mnist_mlp(), 1);
  const auto data = noise_data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(predict(model, data.features));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(256);

void BM_TrainStep(benchmark::State& state) {
  auto model = initialize(mnist_mlp(), 1);
  const auto data = noise_data(32);
  for (auto _ : state) {
    const auto lg = loss_and_grads(model, data.features, data.labels);
    model = sgd_step(model, lg.grads, 0.01);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep);

void BM_MutantErrorRate(benchmark::State& state) {
  const auto original = initialize(mnist_mlp(), 1);
  const auto data = noise_data(1000);
  Dataset labelled = data;
  labelled.labels = predict(original, data.features);
  const auto passed = filter_passed(original, labelled);
  const auto mutant = mutate_gf(original, 0.01, 0.1, 7).model;
  for (auto _ : state) benchmark::DoNotOptimize(error_rate(mutant, passed));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(passed.samples.size()));
}
BENCHMARK(BM_MutantErrorRate);

void BM_ModelOperator(benchmark::State& state) {
  const auto original = initialize(mnist_mlp(), 1);
  const auto kind = static_cast<ModelOpKind>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    ModelOp op{kind, 0.01, std::nullopt, ++seed, std::nullopt};
    if (kind == ModelOpKind::kGF) op.gf_sigma = 0.1;
    benchmark::DoNotOptimize(apply(original, op));
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_ModelOperator)->DenseRange(0, 4);

void BM_SerializeRoundTrip(benchmark::State& state) {
  const auto model = initialize(mnist_mlp(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(deserialize_model(serialize_model(model)));
}
BENCHMARK(BM_SerializeRoundTrip);

}  // namespace

BENCHMARK_MAIN();
