#include "dlmut/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dlmut/error.hpp"
#include "dlmut/rng.hpp"

namespace dlmut {

Shape Dataset::sample_shape() const {
  const auto& s = features.shape();
  if (s.size() < 2) return {};
  return Shape(s.begin() + 1, s.end());
}

std::size_t Dataset::sample_size() const noexcept {
  return labels.empty() ? 0 : features.size() / labels.size();
}

std::span<const float> Dataset::sample(std::size_t i) const {
  const auto stride = sample_size();
  return features.values().subspan(i * stride, stride);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw Error(ErrorKind::kEmptyDataset, "subset of zero samples");
  const auto stride = sample_size();
  std::vector<float> values;
  values.reserve(indices.size() * stride);
  std::vector<int> picked;
  picked.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw Error(ErrorKind::kInvalidArgument, "subset index " + std::to_string(i) + " out of range");
    auto s = sample(i);
    values.insert(values.end(), s.begin(), s.end());
    picked.push_back(labels[i]);
  }
  Shape shape{indices.size()};
  for (auto d : sample_shape()) shape.push_back(d);
  return Dataset{Tensor(std::move(shape), std::move(values)), std::move(picked), num_classes};
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int l : labels) ++counts.at(static_cast<std::size_t>(l));
  return counts;
}

std::vector<std::size_t> Dataset::indices_of_class(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) out.push_back(i);
  }
  return out;
}

void Dataset::validate() const {
  if (num_classes == 0) throw Error(ErrorKind::kInvalidArgument, "dataset has zero classes");
  if (labels.empty()) throw Error(ErrorKind::kEmptyDataset, "dataset has no samples");
  if (features.rank() < 2 || features.shape()[0] != labels.size()) {
    throw Error(ErrorKind::kInvalidArgument, "features " + shape_string(features.shape()) + " vs " +
                                                 std::to_string(labels.size()) + " labels");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw Error(ErrorKind::kInvalidArgument, "label " + std::to_string(l) + " outside [0, " +
                                                   std::to_string(num_classes) + ")");
    }
  }
  for (float v : features.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorKind::kInvalidArgument, "feature value outside [0, 1]");
  }
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > buf.size()) throw Error(ErrorKind::kTruncated, path.string() + ": header cut short");
  return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
         (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
  out.write(bytes, 4);
}

std::string hex_magic(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t num_classes) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);

  const auto img_magic = read_be32(img, 0, images);
  if (img_magic != kIdxImagesMagic) {
    throw Error(ErrorKind::kBadMagic, images.string() + ": magic " + hex_magic(img_magic) + ", expected 0x803");
  }
  const auto lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kIdxLabelsMagic) {
    throw Error(ErrorKind::kBadMagic, labels.string() + ": magic " + hex_magic(lab_magic) + ", expected 0x801");
  }
  const std::size_t count = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t label_count = read_be32(lab, 4, labels);
  if (count != label_count) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  }
  if (count == 0 || rows == 0 || cols == 0) throw Error(ErrorKind::kDimensionMismatch, "IDX file declares an empty dimension");
  if (img.size() < 16 + count * rows * cols) {
    throw Error(ErrorKind::kTruncated, images.string() + ": expected " + std::to_string(count * rows * cols) +
                                           " pixel bytes, found " + std::to_string(img.size() - 16));
  }
  if (lab.size() < 8 + count) {
    throw Error(ErrorKind::kTruncated, labels.string() + ": expected " + std::to_string(count) + " label bytes, found " +
                                           std::to_string(lab.size() - 8));
  }

  std::vector<float> pixels(count * rows * cols);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<float>(img[16 + i]) / 255.0f;
  std::vector<int> ys(count);
  for (std::size_t i = 0; i < count; ++i) ys[i] = lab[8 + i];

  Dataset data{Tensor({count, 1, rows, cols}, std::move(pixels)), std::move(ys), num_classes};
  for (int l : data.labels) {
    if (static_cast<std::size_t>(l) >= num_classes) {
      throw Error(ErrorKind::kInvalidArgument, labels.string() + ": label " + std::to_string(l) + " >= " +
                                                   std::to_string(num_classes));
    }
  }
  return data;
}

void write_idx(const Dataset& data, std::size_t rows, std::size_t cols, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  if (data.sample_size() != rows * cols) {
    throw Error(ErrorKind::kShapeMismatch, "samples have " + std::to_string(data.sample_size()) + " values, not " +
                                               std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::ofstream img(images, std::ios::binary | std::ios::trunc);
  std::ofstream lab(labels, std::ios::binary | std::ios::trunc);
  if (!img || !lab) throw Error(ErrorKind::kIo, "cannot write IDX files at " + images.string());
  put_be32(img, kIdxImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  for (float v : data.features.values()) {
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
  }
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int l : data.labels) lab.put(static_cast<char>(l));
  if (!img || !lab) throw Error(ErrorKind::kIo, "write failed for " + images.string());
}

Dataset load_csv(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kEmptyDataset, path.string() + " is empty");
  std::vector<float> values;
  std::vector<int> ys;
  std::size_t width = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> fields;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw Error(ErrorKind::kInvalidArgument, path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (fields.size() < 2) throw Error(ErrorKind::kInvalidArgument, path.string() + ":" + std::to_string(lineno) + ": too few columns");
    if (width == 0) width = fields.size() - 1;
    if (fields.size() - 1 != width) {
      throw Error(ErrorKind::kDimensionMismatch, path.string() + ":" + std::to_string(lineno) + ": column count changed");
    }
    for (std::size_t j = 0; j < width; ++j) values.push_back(static_cast<float>(fields[j]));
    const double label = fields.back();
    if (label < 0 || label != std::floor(label)) {
      throw Error(ErrorKind::kInvalidArgument, path.string() + ":" + std::to_string(lineno) + ": bad label");
    }
    ys.push_back(static_cast<int>(label));
  }
  if (ys.empty()) throw Error(ErrorKind::kEmptyDataset, path.string() + " has no rows");
  if (num_classes == 0) num_classes = static_cast<std::size_t>(*std::max_element(ys.begin(), ys.end())) + 1;
  const std::size_t n = ys.size();
  Dataset data{Tensor({n, width}, std::move(values)), std::move(ys), num_classes};
  data.validate();
  return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const auto d = data.sample_size();
  for (std::size_t j = 0; j < d; ++j) out << "f" << j << ",";
  out << "label\n";
  out.precision(9);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (float v : data.sample(i)) out << v << ",";
    out << data.labels[i] << "\n";
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

Dataset make_blobs(const BlobConfig& cfg) {
  if (cfg.classes == 0 || cfg.dim == 0 || cfg.samples == 0) {
    throw Error(ErrorKind::kInvalidArgument, "blob config needs positive classes, dim and samples");
  }
  Rng rng(derive_seed(cfg.seed, "blobs"));
  std::normal_distribution<double> noise(0.0, cfg.spread);
  std::vector<float> values(cfg.samples * cfg.dim);
  std::vector<int> ys(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const std::size_t c = i % cfg.classes;
    ys[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      const double mean = 0.5 + 0.3 * std::cos(2.0 * std::numbers::pi * double(c + j) / double(cfg.classes));
      values[i * cfg.dim + j] = static_cast<float>(std::clamp(mean + noise(rng), 0.0, 1.0));
    }
  }
  return Dataset{Tensor({cfg.samples, cfg.dim}, std::move(values)), std::move(ys), cfg.classes};
}

}  // namespace dlmut
