#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlmut/dataset.hpp"

namespace dlmut {

/// Probability that a non-uniform draw takes the favored class.
inline constexpr double kFavoredClassProbability = 0.8;

enum class SamplingMode { kUniform, kNonUniform };
enum class SampleSource { kTrain, kTest };

struct SamplingPlan {
  SampleSource source = SampleSource::kTest;
  std::size_t size = 0;
  SamplingMode mode = SamplingMode::kUniform;
  std::optional<int> favored_class;  // set iff mode == kNonUniform
  std::uint64_t seed = 0;
};

/// Round-robin over classes in a seeded order, each class drawn without
/// replacement; per-class counts differ by at most one unless a class runs
/// out. The result order is shuffled. Throws kInvalidArgument when size
/// exceeds the data.
std::vector<std::size_t> sample_uniform_indices(const Dataset& data, std::size_t size, std::uint64_t seed);

/// Each draw picks the favored class with probability 0.8, otherwise a
/// uniformly chosen other class (re-drawn if that class is exhausted).
/// Throws kExhausted if the favored class runs out, kInvalidArgument if it
/// has no samples at all.
std::vector<std::size_t> sample_nonuniform_indices(const Dataset& data, std::size_t size, int favored_class,
                                                   std::uint64_t seed);

Dataset sample_uniform(const Dataset& data, std::size_t size, std::uint64_t seed);
Dataset sample_nonuniform(const Dataset& data, std::size_t size, int favored_class, std::uint64_t seed);
std::vector<std::size_t> plan_indices(const Dataset& data, const SamplingPlan& plan);

/// One (uniform, non-uniform) pair of a controlled setting. Index vectors
/// refer to the source dataset of the setting.
struct ControlledPair {
  int setting = 0;  // 1: training source, 2: test source
  std::size_t repetition = 0;
  SampleSource source = SampleSource::kTest;
  int favored_class = 0;
  std::vector<std::size_t> uniform;
  std::vector<std::size_t> nonuniform;
};

struct ControlledSizes {
  std::size_t train = 5000;  // setting 1; 0 disables it
  std::size_t test = 1000;   // setting 2; 0 disables it
};

/// For each repetition: a setting-1 pair drawn from `train` and a
/// setting-2 pair drawn from `test`, in that order. Favored classes are
/// drawn uniformly per pair. Throws kInvalidArgument when a source is
/// smaller than its size.
std::vector<ControlledPair> make_controlled_pairs(const Dataset& train, const Dataset& test, std::size_t repetitions,
                                                  std::uint64_t seed, ControlledSizes sizes = {});

}  // namespace dlmut
