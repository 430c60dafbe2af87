#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dlmut/tensor.hpp"

namespace dlmut {

enum class Activation { kIdentity, kRelu, kSoftmax };

enum class LayerKind { kDense, kConv2D, kMaxPool2x2, kFlatten, kActivation };

const char* to_string(Activation fn) noexcept;
const char* to_string(LayerKind kind) noexcept;
std::optional<Activation> parse_activation(std::string_view name) noexcept;
std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept;

/// One layer of a model. Dense and Conv2D carry an activation attribute;
/// a standalone Activation layer stores its function in the same field.
///
/// Dense expects a rank-1 input of `in` features. Conv2D expects a
/// [channels, height, width] input and uses valid padding with stride 1.
struct LayerSpec {
  LayerKind kind = LayerKind::kFlatten;
  std::size_t in = 0;   // Dense: input features, Conv2D: input channels
  std::size_t out = 0;  // Dense: output features, Conv2D: output channels
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  Activation activation = Activation::kIdentity;

  static LayerSpec dense(std::size_t in, std::size_t out, Activation fn = Activation::kIdentity);
  static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
                          Activation fn = Activation::kIdentity);
  static LayerSpec maxpool2x2();
  static LayerSpec flatten();
  static LayerSpec activation_layer(Activation fn);

  bool has_params() const noexcept { return kind == LayerKind::kDense || kind == LayerKind::kConv2D; }
  bool carries_activation() const noexcept { return has_params() || kind == LayerKind::kActivation; }
  Shape weight_shape() const;
  Shape bias_shape() const;
  std::size_t parameter_count() const;

  bool operator==(const LayerSpec&) const = default;
};

struct ModelSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::size_t num_classes = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// Output shape of `layer` applied to `input`; throws kShapeMismatch.
Shape layer_output_shape(const LayerSpec& layer, const Shape& input);

/// shapes[0] is the model input, shapes[i + 1] is the output of layer i.
std::vector<Shape> infer_shapes(const ModelSpec& spec);

/// Full structural check: shape inference succeeds, Softmax appears only on
/// the final layer (which must apply it), and the final width equals
/// num_classes. Throws kShapeMismatch or kInvalidArgument.
void validate(const ModelSpec& spec);

bool is_shape_preserving(const LayerSpec& layer, const Shape& input);

std::size_t parameter_count(const ModelSpec& spec);

/// Builds a spec from a comma-separated layer list, e.g.
/// "flatten,dense:128:relu,dense:64:relu,dense:10:softmax".
/// Tokens: flatten | pool | relu | softmax | identity | dense:N[:act] |
/// conv:OUT:K[:act]. Input sizes are inferred from `input_shape`.
ModelSpec parse_architecture(std::string_view text, const Shape& input_shape, std::size_t num_classes);

std::string describe(const ModelSpec& spec);

struct LayerParams {
  Tensor weight;  // Dense [out, in]; Conv2D [out_ch, in_ch, kh, kw]
  Tensor bias;    // [out] / [out_ch]

  bool bitwise_equal(const LayerParams& other) const noexcept {
    return weight.bitwise_equal(other.weight) && bias.bitwise_equal(other.bias);
  }
};

/// A spec together with concrete parameters. Immutable: every mutation
/// operator builds a new model.
class TrainedModel {
 public:
  /// Validates the spec and that every parameter tensor has exactly the
  /// shape the spec requires (empty tensors for parameterless layers).
  TrainedModel(ModelSpec spec, std::vector<LayerParams> params);

  /// All parameters zero.
  static TrainedModel zeros(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<LayerParams>& params() const noexcept { return params_; }
  const LayerParams& params(std::size_t layer) const { return params_.at(layer); }
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }

  std::size_t num_classes() const noexcept { return spec_.num_classes; }

  bool bitwise_equal(const TrainedModel& other) const noexcept;

 private:
  ModelSpec spec_;
  std::vector<LayerParams> params_;
  std::vector<Shape> shapes_;
};

}  // namespace dlmut
