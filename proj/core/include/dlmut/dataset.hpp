#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dlmut/tensor.hpp"

namespace dlmut {

/// Labeled samples. `features` is shaped [N, sample dims...] with values in
/// [0, 1]; every label is in [0, num_classes).
struct Dataset {
  Tensor features;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  Shape sample_shape() const;
  std::size_t sample_size() const noexcept;
  std::span<const float> sample(std::size_t i) const;

  /// Samples at `indices`, in that order; repeats allowed.
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;
  std::vector<std::size_t> indices_of_class(int label) const;

  /// Throws kInvalidArgument on any broken invariant.
  void validate() const;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an MNIST-style IDX pair (big-endian, unsigned byte payload).
/// Pixels are scaled by 1/255; samples are shaped [1, rows, cols].
/// Errors: kIo (unreadable), kBadMagic, kDimensionMismatch (image/label
/// counts differ), kTruncated (payload shorter than the header promises),
/// kInvalidArgument (label >= num_classes).
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes = 10);

/// Writes `data` as an IDX pair; samples must be [1, rows, cols] or [rows*cols]
/// with explicit dims. Pixels are rounded to the nearest of 256 levels.
void write_idx(const Dataset& data, std::size_t rows, std::size_t cols, const std::filesystem::path& images,
               const std::filesystem::path& labels);

/// CSV with a header row; each line is `f0,...,f{d-1},label`. With
/// num_classes == 0 the class count is max(label) + 1.
Dataset load_csv(const std::filesystem::path& path, std::size_t num_classes = 0);
void save_csv(const Dataset& data, const std::filesystem::path& path);

/// Gaussian blobs, one per class. Class c has mean
///   mu_c[j] = 0.5 + 0.3 * cos(2*pi*(c + j) / classes)
/// and isotropic standard deviation `spread`; values are clipped to [0, 1].
/// Sample i belongs to class i % classes.
struct BlobConfig {
  std::size_t classes = 2;
  std::size_t dim = 2;
  std::size_t samples = 200;
  double spread = 0.05;
  std::uint64_t seed = 0;
};
Dataset make_blobs(const BlobConfig& cfg);

}  // namespace dlmut
