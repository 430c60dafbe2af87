#pragma once

#include <cstddef>
#include <vector>

#include "dlmut/model.hpp"

namespace dlmut {

/// Structural edits shared by the program-level (LR, LA_s, AFR_s) and
/// layer-level (LD, LA_m, AFR_m) operators.
enum class LayerEdit {
  kRemove,      // drop a shape-preserving, non-final layer
  kAdd,         // duplicate a shape-preserving layer, or insert ReLU after a layer whose output is not already ReLU'd
  kDeactivate,  // set a hidden layer's ReLU activation to Identity
};

/// Layer indices the edit may target, ascending. The final (softmax) layer
/// is never eligible.
std::vector<std::size_t> eligible_layers(const ModelSpec& spec, LayerEdit edit);

/// True when kAdd at `index` copies the layer rather than inserting a new
/// Activation(ReLU) after it.
bool add_duplicates(const ModelSpec& spec, std::size_t index);

/// Applies the edit at `index` (which must be eligible; kInvalidArgument
/// otherwise). The result always passes validate().
ModelSpec edit_spec(const ModelSpec& spec, LayerEdit edit, std::size_t index);

/// Same edit on a trained model. Removed layers take their parameters with
/// them; duplicated layers copy theirs.
TrainedModel edit_model(const TrainedModel& model, LayerEdit edit, std::size_t index);

}  // namespace dlmut
