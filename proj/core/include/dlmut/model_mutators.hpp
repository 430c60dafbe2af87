#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dlmut/model.hpp"
#include "dlmut/mutant.hpp"

namespace dlmut {

/// Model-level operators: Gaussian Fuzzing, Weight Shuffling, Neuron Effect
/// Blocking, Neuron Activation Inverse, Neuron Switch, Layer Deactivation,
/// Layer Addition and Activation Function Removal.
enum class ModelOpKind { kGF, kWS, kNEB, kNAI, kNS, kLD, kLA, kAFR };

const char* to_string(ModelOpKind kind) noexcept;
std::optional<ModelOpKind> parse_model_op(std::string_view name) noexcept;
bool is_layer_level(ModelOpKind kind) noexcept;

struct ModelOp {
  ModelOpKind kind = ModelOpKind::kGF;
  std::optional<double> ratio;     // GF, WS, NEB, NAI, NS
  std::optional<double> gf_sigma;  // GF only
  std::uint64_t seed = 0;
  std::optional<std::size_t> target_layer;  // LD, LA_m, AFR_m

  /// Throws kInvalidArgument unless ratio is present (and in (0, 1]) exactly
  /// for the weight/neuron kinds and gf_sigma exactly for GF.
  void validate() const;
};

struct MutationResult {
  TrainedModel model;
  std::size_t affected = 0;
};

/// A neuron is one output unit of a Dense layer or one output channel of a
/// Conv2D layer. Its incoming weights are the matching weight row / kernel.
struct NeuronRef {
  std::size_t layer = 0;
  std::size_t unit = 0;
  bool operator==(const NeuronRef&) const = default;
};

/// Every neuron of every parameterized layer, in layer order.
std::vector<NeuronRef> neurons(const ModelSpec& spec);

/// Ratios below are in [0, 1]; 0 selects nothing.

/// Replaces ceil(ratio * #weights) distinct weights w with draws from
/// N(w, sigma^2). Biases are not weights. sigma == 0 leaves values as is.
MutationResult mutate_gf(const TrainedModel& model, double ratio, double sigma, std::uint64_t seed);

/// Fisher-Yates shuffles the incoming weights of ceil(ratio * #neurons)
/// neurons.
MutationResult mutate_ws(const TrainedModel& model, double ratio, std::uint64_t seed);

/// Zeroes, for ceil(ratio * #eligible) neurons, every weight of the next
/// parameterized layer that reads the neuron's output. Neurons of the last
/// parameterized layer are not eligible.
MutationResult mutate_neb(const TrainedModel& model, double ratio, std::uint64_t seed);

/// Negates incoming weights and bias of ceil(ratio * #neurons) neurons,
/// which negates their pre-activation exactly.
MutationResult mutate_nai(const TrainedModel& model, double ratio, std::uint64_t seed);

/// Forms ceil(ratio * #neurons) / 2 disjoint same-layer pairs and swaps
/// their incoming weights and biases.
MutationResult mutate_ns(const TrainedModel& model, double ratio, std::uint64_t seed);

/// Layer-level operators; an unset target is drawn uniformly from the
/// eligible layers. Throw kNoEligibleTarget when none qualifies.
MutationResult mutate_ld(const TrainedModel& model, std::optional<std::size_t> target, std::uint64_t seed = 0);
MutationResult mutate_la(const TrainedModel& model, std::optional<std::size_t> target, std::uint64_t seed = 0);
MutationResult mutate_afr(const TrainedModel& model, std::optional<std::size_t> target, std::uint64_t seed = 0);

std::vector<std::size_t> layer_targets(const ModelSpec& spec, ModelOpKind kind);

MutationResult apply(const TrainedModel& model, const ModelOp& op);

/// Half the standard deviation of all weights of the model.
double default_gf_sigma(const TrainedModel& model);

struct ModelMutationConfig {
  std::size_t budget = 50;        // per weight/neuron operator
  std::size_t layer_budget = 50;  // per layer operator, capped by eligible layers
  double ratio = 0.01;
  std::optional<double> gf_sigma;  // unset: default_gf_sigma
  std::vector<std::string> operators;  // empty: all eight
  std::string parent_checksum;
};

/// Generates mutants per operator with seeds derived from `seed`. Mutants
/// identical to the original are recorded as failures ("equivalent").
MutantBatch generate_model_mutants(const TrainedModel& model, const ModelMutationConfig& cfg, std::uint64_t seed);

}  // namespace dlmut
