#include "dlmut/serialize.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dlmut/error.hpp"
#include "json.hpp"

namespace dlmut {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr std::string_view kTrailerTag = "crc32 ";

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::kMalformedManifest, what); }

void append_le(std::vector<std::uint8_t>& out, const Tensor& t) {
  for (float v : t.values()) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
}

std::vector<float> floats_from_le(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0) malformed("parameter blob length is not a multiple of 4");
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[4 * i + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

json spec_to_json(const ModelSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) {
    layers.push_back({{"kind", to_string(l.kind)},
                      {"in", l.in},
                      {"out", l.out},
                      {"kernel_h", l.kernel_h},
                      {"kernel_w", l.kernel_w},
                      {"activation", to_string(l.activation)}});
  }
  return {{"input_shape", spec.input_shape}, {"num_classes", spec.num_classes}, {"layers", layers}};
}

template <typename T>
T field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) malformed(std::string("missing key '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    malformed(std::string("bad value for '") + key + "'");
  }
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.input_shape = field<Shape>(j, "input_shape");
  spec.num_classes = field<std::size_t>(j, "num_classes");
  auto layers = field<json>(j, "layers");
  if (!layers.is_array()) malformed("'layers' is not an array");
  for (const auto& lj : layers) {
    auto kind = parse_layer_kind(field<std::string>(lj, "kind"));
    if (!kind) malformed("unknown layer kind '" + field<std::string>(lj, "kind") + "'");
    auto fn = parse_activation(field<std::string>(lj, "activation"));
    if (!fn) malformed("unknown activation '" + field<std::string>(lj, "activation") + "'");
    LayerSpec layer;
    layer.kind = *kind;
    layer.in = field<std::size_t>(lj, "in");
    layer.out = field<std::size_t>(lj, "out");
    layer.kernel_h = field<std::size_t>(lj, "kernel_h");
    layer.kernel_w = field<std::size_t>(lj, "kernel_w");
    layer.activation = *fn;
    spec.layers.push_back(layer);
  }
  return spec;
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32(std::string_view bytes) noexcept {
  return crc32(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    std::uint32_t n = (std::uint32_t(bytes[i]) << 16) | (std::uint32_t(bytes[i + 1]) << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (const auto rest = bytes.size() - i; rest > 0) {
    std::uint32_t n = std::uint32_t(bytes[i]) << 16;
    if (rest == 2) n |= std::uint32_t(bytes[i + 1]) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kAlphabet[i])] = i;
    return t;
  }();
  if (text.size() % 4 != 0) malformed("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::uint32_t n = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        n <<= 6;
        continue;
      }
      const int v = table[static_cast<unsigned char>(c)];
      if (v < 0 || pad > 0) malformed("invalid base64 character");
      n = (n << 6) | std::uint32_t(v);
    }
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

std::string serialize_model(const TrainedModel& model) {
  json params = json::array();
  std::vector<std::uint8_t> all_bytes;
  const auto& layers = model.spec().layers;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].has_params()) continue;
    const auto& p = model.params(i);
    for (auto [name, tensor] : {std::pair{"weight", &p.weight}, std::pair{"bias", &p.bias}}) {
      std::vector<std::uint8_t> bytes;
      bytes.reserve(tensor->size() * 4);
      append_le(bytes, *tensor);
      params.push_back({{"layer", i}, {"tensor", name}, {"shape", tensor->shape()}, {"data", base64_encode(bytes)}});
      all_bytes.insert(all_bytes.end(), bytes.begin(), bytes.end());
    }
  }
  json manifest = {{"format_version", kModelFormatVersion}, {"spec", spec_to_json(model.spec())}, {"params", params}};
  std::string text = manifest.dump(1);
  text += "\n";
  text += kTrailerTag;
  text += hex32(crc32(all_bytes));
  text += "\n";
  return text;
}

TrainedModel deserialize_model(std::string_view text) {
  // Trailer first: a truncated file loses it before anything else.
  std::string_view body = text;
  if (body.empty() || body.back() != '\n') throw Error(ErrorKind::kChecksumFailure, "file is truncated");
  body.remove_suffix(1);
  const auto nl = body.rfind('\n');
  const auto trailer = nl == std::string_view::npos ? body : body.substr(nl + 1);
  if (trailer.size() != kTrailerTag.size() + 8 || trailer.substr(0, kTrailerTag.size()) != kTrailerTag) {
    throw Error(ErrorKind::kChecksumFailure, "missing or damaged checksum trailer");
  }
  std::uint32_t expected = 0;
  for (char c : trailer.substr(kTrailerTag.size())) {
    int v = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : -1;
    if (v < 0) throw Error(ErrorKind::kChecksumFailure, "damaged checksum trailer");
    expected = (expected << 4) | std::uint32_t(v);
  }
  const auto manifest_text = body.substr(0, nl);

  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::parse_error& e) {
    malformed(std::string("manifest is not valid JSON: ") + e.what());
  }
  const auto version = field<long long>(manifest, "format_version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::kVersionMismatch, "format_version " + std::to_string(version) + ", expected " +
                                                 std::to_string(kModelFormatVersion));
  }
  ModelSpec spec = spec_from_json(field<json>(manifest, "spec"));
  std::vector<LayerParams> params(spec.layers.size());
  std::vector<std::uint8_t> all_bytes;
  auto entries = field<json>(manifest, "params");
  if (!entries.is_array()) malformed("'params' is not an array");
  std::vector<int> seen(spec.layers.size() * 2, 0);
  for (const auto& entry : entries) {
    const auto layer = field<std::size_t>(entry, "layer");
    const auto name = field<std::string>(entry, "tensor");
    if (layer >= spec.layers.size()) malformed("parameter entry for missing layer " + std::to_string(layer));
    if (name != "weight" && name != "bias") malformed("unknown tensor name '" + name + "'");
    const int slot = name == "weight" ? 0 : 1;
    if (seen[layer * 2 + slot]++) malformed("duplicate parameter entry for layer " + std::to_string(layer));
    auto bytes = base64_decode(field<std::string>(entry, "data"));
    all_bytes.insert(all_bytes.end(), bytes.begin(), bytes.end());
    try {
      Tensor t(field<Shape>(entry, "shape"), floats_from_le(bytes));
      (slot == 0 ? params[layer].weight : params[layer].bias) = std::move(t);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kMalformedManifest) throw;
      malformed(std::string("parameter tensor: ") + e.what());
    }
  }
  if (crc32(all_bytes) != expected) {
    throw Error(ErrorKind::kChecksumFailure, "CRC-32 mismatch: file says " + hex32(expected) + ", data gives " +
                                                 hex32(crc32(all_bytes)));
  }
  try {
    return TrainedModel(std::move(spec), std::move(params));
  } catch (const Error& e) {
    malformed(std::string("manifest does not describe a valid model: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  const auto text = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

std::string model_checksum(const TrainedModel& model) {
  return hex32(crc32(serialize_model(model)));
}

}  // namespace dlmut
