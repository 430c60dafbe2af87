#include "dlmut/structure.hpp"

#include <algorithm>

#include "dlmut/error.hpp"

namespace dlmut {

namespace {

bool outputs_relu(const LayerSpec& layer) {
  return layer.carries_activation() && layer.activation == Activation::kRelu;
}

}  // namespace

std::vector<std::size_t> eligible_layers(const ModelSpec& spec, LayerEdit edit) {
  std::vector<std::size_t> out;
  if (spec.layers.size() < 2) return out;
  const auto shapes = infer_shapes(spec);
  const std::size_t last = spec.layers.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    const auto& layer = spec.layers[i];
    const bool preserving = is_shape_preserving(layer, shapes[i]);
    bool ok = false;
    switch (edit) {
      case LayerEdit::kRemove: ok = preserving; break;
      case LayerEdit::kAdd: ok = preserving || !outputs_relu(layer); break;
      case LayerEdit::kDeactivate: ok = outputs_relu(layer); break;
    }
    if (ok) out.push_back(i);
  }
  return out;
}

bool add_duplicates(const ModelSpec& spec, std::size_t index) {
  const auto shapes = infer_shapes(spec);
  return is_shape_preserving(spec.layers.at(index), shapes.at(index));
}

namespace {

void require_eligible(const ModelSpec& spec, LayerEdit edit, std::size_t index) {
  const auto ok = eligible_layers(spec, edit);
  if (std::find(ok.begin(), ok.end(), index) == ok.end()) {
    throw Error(ErrorKind::kInvalidArgument, "layer " + std::to_string(index) + " is not eligible for this edit");
  }
}

}  // namespace

ModelSpec edit_spec(const ModelSpec& spec, LayerEdit edit, std::size_t index) {
  require_eligible(spec, edit, index);
  ModelSpec out = spec;
  const auto at = out.layers.begin() + static_cast<std::ptrdiff_t>(index);
  switch (edit) {
    case LayerEdit::kRemove:
      out.layers.erase(at);
      break;
    case LayerEdit::kAdd: {
      const LayerSpec inserted = add_duplicates(spec, index) ? spec.layers[index]
                                                             : LayerSpec::activation_layer(Activation::kRelu);
      out.layers.insert(at + 1, inserted);
      break;
    }
    case LayerEdit::kDeactivate:
      out.layers[index].activation = Activation::kIdentity;
      break;
  }
  validate(out);
  return out;
}

TrainedModel edit_model(const TrainedModel& model, LayerEdit edit, std::size_t index) {
  ModelSpec spec = edit_spec(model.spec(), edit, index);
  auto params = model.params();
  const auto at = params.begin() + static_cast<std::ptrdiff_t>(index);
  switch (edit) {
    case LayerEdit::kRemove:
      params.erase(at);
      break;
    case LayerEdit::kAdd:
      params.insert(at + 1, add_duplicates(model.spec(), index) ? model.params(index) : LayerParams{});
      break;
    case LayerEdit::kDeactivate:
      break;
  }
  return TrainedModel(std::move(spec), std::move(params));
}

}  // namespace dlmut
