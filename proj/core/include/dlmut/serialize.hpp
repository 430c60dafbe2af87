#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "dlmut/model.hpp"

namespace dlmut {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelExtension = ".nmm";

/// Model file layout (`.nmm`):
///
///   <JSON manifest>
///   crc32 <8 lowercase hex digits>\n
///
/// The manifest has keys `format_version` (1), `spec` (input_shape,
/// num_classes, layers[{kind, in, out, kernel_h, kernel_w, activation}])
/// and `params`, one entry per parameter tensor in layer order:
/// {layer, tensor: "weight"|"bias", shape, data}. `data` is base64 of the
/// little-endian float32 values in row-major order. The trailer is CRC-32
/// (zlib polynomial) over the concatenation of every decoded `data` blob.
///
/// Load errors: a missing/damaged trailer or CRC mismatch is
/// kChecksumFailure, an unsupported format_version is kVersionMismatch and
/// anything structurally wrong in the manifest is kMalformedManifest.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;
std::uint32_t crc32(std::string_view bytes) noexcept;

/// CRC-32 of the serialized model, as 8 hex digits. Used to reference
/// models in reports independent of where the file lives.
std::string model_checksum(const TrainedModel& model);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws kMalformedManifest on invalid input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace dlmut
