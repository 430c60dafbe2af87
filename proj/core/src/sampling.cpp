#include "dlmut/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "dlmut/error.hpp"
#include "dlmut/rng.hpp"

namespace dlmut {

namespace {

/// Per-class index queues, each shuffled; popping from the back draws
/// without replacement.
std::vector<std::vector<std::size_t>> shuffled_classes(const Dataset& data, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class.at(static_cast<std::size_t>(data.labels[i])).push_back(i);
  for (auto& q : by_class) std::shuffle(q.begin(), q.end(), rng);
  return by_class;
}

void check_size(const Dataset& data, std::size_t size) {
  if (size > data.size()) {
    throw Error(ErrorKind::kInvalidArgument, "cannot sample " + std::to_string(size) + " from " +
                                                 std::to_string(data.size()) + " samples");
  }
}

}  // namespace

std::vector<std::size_t> sample_uniform_indices(const Dataset& data, std::size_t size, std::uint64_t seed) {
  check_size(data, size);
  Rng rng(derive_seed(seed, "sample-uniform"));
  auto by_class = shuffled_classes(data, rng);
  std::vector<std::size_t> order(data.num_classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> picked;
  picked.reserve(size);
  while (picked.size() < size) {
    for (auto c : order) {
      if (picked.size() == size) break;
      if (by_class[c].empty()) continue;
      picked.push_back(by_class[c].back());
      by_class[c].pop_back();
    }
  }
  std::shuffle(picked.begin(), picked.end(), rng);
  return picked;
}

std::vector<std::size_t> sample_nonuniform_indices(const Dataset& data, std::size_t size, int favored_class,
                                                   std::uint64_t seed) {
  check_size(data, size);
  if (favored_class < 0 || static_cast<std::size_t>(favored_class) >= data.num_classes) {
    throw Error(ErrorKind::kInvalidArgument, "favored class " + std::to_string(favored_class) + " out of range");
  }
  Rng rng(derive_seed(seed, "sample-nonuniform"));
  auto by_class = shuffled_classes(data, rng);
  const auto favored = static_cast<std::size_t>(favored_class);
  if (by_class[favored].empty()) {
    throw Error(ErrorKind::kInvalidArgument, "favored class " + std::to_string(favored_class) + " has no samples");
  }
  std::vector<std::size_t> others;
  for (std::size_t c = 0; c < data.num_classes; ++c) {
    if (c != favored && !by_class[c].empty()) others.push_back(c);
  }

  std::bernoulli_distribution take_favored(kFavoredClassProbability);
  std::vector<std::size_t> picked;
  picked.reserve(size);
  while (picked.size() < size) {
    std::size_t c = favored;
    if (!take_favored(rng) && !others.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
      const auto slot = pick(rng);
      c = others[slot];
      if (by_class[c].size() == 1) others.erase(others.begin() + static_cast<std::ptrdiff_t>(slot));
    }
    if (by_class[c].empty()) {
      throw Error(ErrorKind::kExhausted, "favored class " + std::to_string(favored_class) + " exhausted after " +
                                             std::to_string(picked.size()) + " draws");
    }
    picked.push_back(by_class[c].back());
    by_class[c].pop_back();
  }
  return picked;
}

Dataset sample_uniform(const Dataset& data, std::size_t size, std::uint64_t seed) {
  const auto idx = sample_uniform_indices(data, size, seed);
  return data.subset(idx);
}

Dataset sample_nonuniform(const Dataset& data, std::size_t size, int favored_class, std::uint64_t seed) {
  const auto idx = sample_nonuniform_indices(data, size, favored_class, seed);
  return data.subset(idx);
}

std::vector<std::size_t> plan_indices(const Dataset& data, const SamplingPlan& plan) {
  if (plan.mode == SamplingMode::kUniform) {
    if (plan.favored_class) throw Error(ErrorKind::kInvalidArgument, "uniform plan must not name a favored class");
    return sample_uniform_indices(data, plan.size, plan.seed);
  }
  if (!plan.favored_class) throw Error(ErrorKind::kInvalidArgument, "non-uniform plan needs a favored class");
  return sample_nonuniform_indices(data, plan.size, *plan.favored_class, plan.seed);
}

std::vector<ControlledPair> make_controlled_pairs(const Dataset& train, const Dataset& test, std::size_t repetitions,
                                                  std::uint64_t seed, ControlledSizes sizes) {
  struct Setting {
    int id;
    SampleSource source;
    const Dataset* data;
    std::size_t size;
  };
  std::vector<Setting> settings;
  if (sizes.train > 0) settings.push_back({1, SampleSource::kTrain, &train, sizes.train});
  if (sizes.test > 0) settings.push_back({2, SampleSource::kTest, &test, sizes.test});
  for (const auto& s : settings) {
    if (repetitions > 0 && s.data->size() < s.size) {
      throw Error(ErrorKind::kInvalidArgument, "insufficient source data for setting " + std::to_string(s.id) + ": need " +
                                                   std::to_string(s.size) + ", have " + std::to_string(s.data->size()));
    }
  }

  std::vector<ControlledPair> pairs;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (const auto& s : settings) {
      const auto pair_seed = derive_seed(seed, "controlled-pair-" + std::to_string(s.id), rep);
      Rng rng(derive_seed(pair_seed, "favored"));
      // Only classes present in the source can be favored.
      std::vector<std::size_t> present;
      const auto counts = s.data->class_counts();
      for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) present.push_back(c);
      }
      std::uniform_int_distribution<std::size_t> pick(0, present.size() - 1);
      ControlledPair pair;
      pair.setting = s.id;
      pair.repetition = rep;
      pair.source = s.source;
      pair.favored_class = static_cast<int>(present[pick(rng)]);
      pair.uniform = sample_uniform_indices(*s.data, s.size, derive_seed(pair_seed, "uniform"));
      pair.nonuniform = sample_nonuniform_indices(*s.data, s.size, pair.favored_class, derive_seed(pair_seed, "nonuniform"));
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

}  // namespace dlmut
