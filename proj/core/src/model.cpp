#include "dlmut/model.hpp"

#include <charconv>
#include <sstream>

#include "dlmut/error.hpp"

namespace dlmut {

const char* to_string(Activation fn) noexcept {
  switch (fn) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

const char* to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv2D: return "conv2d";
    case LayerKind::kMaxPool2x2: return "maxpool2x2";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kActivation: return "activation";
  }
  return "?";
}

std::optional<Activation> parse_activation(std::string_view name) noexcept {
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "softmax") return Activation::kSoftmax;
  return std::nullopt;
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept {
  for (auto kind : {LayerKind::kDense, LayerKind::kConv2D, LayerKind::kMaxPool2x2, LayerKind::kFlatten,
                    LayerKind::kActivation}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out, Activation fn) {
  return LayerSpec{LayerKind::kDense, in, out, 0, 0, fn};
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw, Activation fn) {
  return LayerSpec{LayerKind::kConv2D, in_ch, out_ch, kh, kw, fn};
}

LayerSpec LayerSpec::maxpool2x2() { return LayerSpec{LayerKind::kMaxPool2x2}; }

LayerSpec LayerSpec::flatten() { return LayerSpec{LayerKind::kFlatten}; }

LayerSpec LayerSpec::activation_layer(Activation fn) {
  LayerSpec layer{LayerKind::kActivation};
  layer.activation = fn;
  return layer;
}

Shape LayerSpec::weight_shape() const {
  switch (kind) {
    case LayerKind::kDense: return {out, in};
    case LayerKind::kConv2D: return {out, in, kernel_h, kernel_w};
    default: return {};
  }
}

Shape LayerSpec::bias_shape() const {
  if (has_params()) return {out};
  return {};
}

std::size_t LayerSpec::parameter_count() const {
  if (!has_params()) return 0;
  return shape_size(weight_shape()) + out;
}

Shape layer_output_shape(const LayerSpec& layer, const Shape& input) {
  auto mismatch = [&](const std::string& what) {
    return Error(ErrorKind::kShapeMismatch,
                 std::string(to_string(layer.kind)) + " layer " + what + ", input " + shape_string(input));
  };
  switch (layer.kind) {
    case LayerKind::kDense:
      if (layer.in == 0 || layer.out == 0) throw mismatch("has a zero dimension");
      if (input.size() != 1 || input[0] != layer.in) {
        throw mismatch("expects [" + std::to_string(layer.in) + "]");
      }
      return {layer.out};
    case LayerKind::kConv2D: {
      if (layer.in == 0 || layer.out == 0 || layer.kernel_h == 0 || layer.kernel_w == 0) {
        throw mismatch("has a zero dimension");
      }
      if (input.size() != 3 || input[0] != layer.in) {
        throw mismatch("expects [" + std::to_string(layer.in) + "xHxW]");
      }
      if (layer.kernel_h > input[1] || layer.kernel_w > input[2]) throw mismatch("kernel larger than image");
      return {layer.out, input[1] - layer.kernel_h + 1, input[2] - layer.kernel_w + 1};
    }
    case LayerKind::kMaxPool2x2:
      if (input.size() != 3) throw mismatch("expects [CxHxW]");
      if (input[1] % 2 != 0 || input[2] % 2 != 0) throw mismatch("needs even spatial dims");
      return {input[0], input[1] / 2, input[2] / 2};
    case LayerKind::kFlatten:
      if (input.empty()) throw mismatch("has no input dims");
      return {shape_size(input)};
    case LayerKind::kActivation:
      if (input.empty()) throw mismatch("has no input dims");
      return input;
  }
  throw mismatch("is unknown");
}

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
  if (spec.input_shape.empty()) throw Error(ErrorKind::kShapeMismatch, "model input shape is empty");
  for (auto d : spec.input_shape) {
    if (d == 0) throw Error(ErrorKind::kShapeMismatch, "model input has a zero dimension");
  }
  std::vector<Shape> shapes{spec.input_shape};
  shapes.reserve(spec.layers.size() + 1);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    try {
      shapes.push_back(layer_output_shape(spec.layers[i], shapes.back()));
    } catch (const Error& e) {
      throw Error(ErrorKind::kShapeMismatch, "layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return shapes;
}

void validate(const ModelSpec& spec) {
  if (spec.layers.empty()) throw Error(ErrorKind::kInvalidArgument, "model has no layers");
  if (spec.num_classes == 0) throw Error(ErrorKind::kInvalidArgument, "num_classes must be positive");
  auto shapes = infer_shapes(spec);
  const std::size_t last = spec.layers.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    const auto& layer = spec.layers[i];
    if (layer.carries_activation() && layer.activation == Activation::kSoftmax) {
      throw Error(ErrorKind::kInvalidArgument, "softmax on non-final layer " + std::to_string(i));
    }
  }
  const auto& final_layer = spec.layers[last];
  if (!final_layer.carries_activation() || final_layer.activation != Activation::kSoftmax) {
    throw Error(ErrorKind::kInvalidArgument, "final layer must apply softmax");
  }
  if (shapes.back() != Shape{spec.num_classes}) {
    throw Error(ErrorKind::kShapeMismatch, "final layer output " + shape_string(shapes.back()) + " but num_classes is " +
                                               std::to_string(spec.num_classes));
  }
}

bool is_shape_preserving(const LayerSpec& layer, const Shape& input) {
  try {
    return layer_output_shape(layer, input) == input;
  } catch (const Error&) {
    return false;
  }
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t n = 0;
  for (const auto& layer : spec.layers) n += layer.parameter_count();
  return n;
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::size_t parse_count(std::string_view token, std::string_view field) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || value == 0) {
    throw Error(ErrorKind::kConfig, "bad size in architecture token '" + std::string(token) + "'");
  }
  return value;
}

Activation parse_act_field(std::string_view token, std::string_view field) {
  auto fn = parse_activation(field);
  if (!fn) throw Error(ErrorKind::kConfig, "unknown activation in '" + std::string(token) + "'");
  return *fn;
}

}  // namespace

ModelSpec parse_architecture(std::string_view text, const Shape& input_shape, std::size_t num_classes) {
  ModelSpec spec{input_shape, {}, num_classes};
  Shape current = input_shape;
  for (auto raw : split(text, ',')) {
    auto token = trim(raw);
    if (token.empty()) continue;
    auto fields = split(token, ':');
    const auto head = fields[0];
    LayerSpec layer;
    if (head == "flatten" && fields.size() == 1) {
      layer = LayerSpec::flatten();
    } else if (head == "pool" && fields.size() == 1) {
      layer = LayerSpec::maxpool2x2();
    } else if (fields.size() == 1 && parse_activation(head)) {
      layer = LayerSpec::activation_layer(*parse_activation(head));
    } else if (head == "dense" && (fields.size() == 2 || fields.size() == 3)) {
      if (current.size() != 1) {
        throw Error(ErrorKind::kConfig, "dense needs a flat input; add 'flatten' before '" + std::string(token) + "'");
      }
      auto fn = fields.size() == 3 ? parse_act_field(token, fields[2]) : Activation::kIdentity;
      layer = LayerSpec::dense(current[0], parse_count(token, fields[1]), fn);
    } else if (head == "conv" && (fields.size() == 3 || fields.size() == 4)) {
      if (current.size() != 3) throw Error(ErrorKind::kConfig, "conv needs a [CxHxW] input at '" + std::string(token) + "'");
      auto k = parse_count(token, fields[2]);
      auto fn = fields.size() == 4 ? parse_act_field(token, fields[3]) : Activation::kIdentity;
      layer = LayerSpec::conv2d(current[0], parse_count(token, fields[1]), k, k, fn);
    } else {
      throw Error(ErrorKind::kConfig, "unrecognized architecture token '" + std::string(token) + "'");
    }
    current = layer_output_shape(layer, current);
    spec.layers.push_back(layer);
  }
  validate(spec);
  return spec;
}

std::string describe(const ModelSpec& spec) {
  std::ostringstream os;
  os << "input " << shape_string(spec.input_shape);
  for (const auto& layer : spec.layers) {
    os << " -> ";
    switch (layer.kind) {
      case LayerKind::kDense: os << "Dense(" << layer.in << "," << layer.out << ")"; break;
      case LayerKind::kConv2D:
        os << "Conv(" << layer.in << "," << layer.out << "," << layer.kernel_h << "x" << layer.kernel_w << ")";
        break;
      case LayerKind::kMaxPool2x2: os << "MaxPool(2,2)"; break;
      case LayerKind::kFlatten: os << "Flatten"; break;
      case LayerKind::kActivation: os << "Activation"; break;
    }
    if (layer.carries_activation() && (layer.activation != Activation::kIdentity || layer.kind == LayerKind::kActivation)) {
      os << "+" << to_string(layer.activation);
    }
  }
  return os.str();
}

TrainedModel::TrainedModel(ModelSpec spec, std::vector<LayerParams> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  validate(spec_);
  shapes_ = infer_shapes(spec_);
  if (params_.size() != spec_.layers.size()) {
    throw Error(ErrorKind::kShapeMismatch, "model has " + std::to_string(spec_.layers.size()) + " layers but " +
                                               std::to_string(params_.size()) + " parameter entries");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& layer = spec_.layers[i];
    const auto& p = params_[i];
    if (!layer.has_params()) {
      if (!p.weight.empty() || !p.bias.empty()) {
        throw Error(ErrorKind::kShapeMismatch, "parameterless layer " + std::to_string(i) + " carries parameters");
      }
      continue;
    }
    if (p.weight.shape() != layer.weight_shape() || p.bias.shape() != layer.bias_shape()) {
      throw Error(ErrorKind::kShapeMismatch, "layer " + std::to_string(i) + " expects weight " +
                                                 shape_string(layer.weight_shape()) + " and bias " +
                                                 shape_string(layer.bias_shape()) + ", got " +
                                                 shape_string(p.weight.shape()) + " and " + shape_string(p.bias.shape()));
    }
  }
}

TrainedModel TrainedModel::zeros(ModelSpec spec) {
  std::vector<LayerParams> params;
  params.reserve(spec.layers.size());
  for (const auto& layer : spec.layers) {
    if (layer.has_params()) {
      params.push_back({Tensor(layer.weight_shape()), Tensor(layer.bias_shape())});
    } else {
      params.emplace_back();
    }
  }
  return TrainedModel(std::move(spec), std::move(params));
}

bool TrainedModel::bitwise_equal(const TrainedModel& other) const noexcept {
  if (!(spec_ == other.spec_) || params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].bitwise_equal(other.params_[i])) return false;
  }
  return true;
}

}  // namespace dlmut
