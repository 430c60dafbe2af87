#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dlmut/model.hpp"

namespace dlmut {

enum class MutationLevel { kSource, kModel };

const char* to_string(MutationLevel level) noexcept;

/// Where a mutant came from. Serialized as the JSON sidecar next to the
/// mutant's `.nmm` file.
struct Provenance {
  std::string op;  // operator name, e.g. "DR", "LA_s", "GF"
  MutationLevel level = MutationLevel::kModel;
  std::string scope;  // "global", "local", "weight", "neuron" or "layer"
  std::optional<int> local_class;
  std::optional<double> ratio;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  std::optional<std::size_t> target_layer;
  std::size_t affected = 0;  // samples, weights, neurons or layers touched
  std::string parent_checksum;
};

struct MutantRecord {
  std::string id;
  Provenance provenance;
  TrainedModel model;
};

struct MutantFailure {
  std::string id;
  Provenance provenance;
  std::string reason;
};

/// Output of a generation run. `attempted` and `produced` are keyed by
/// operator name.
struct MutantBatch {
  std::vector<MutantRecord> mutants;
  std::vector<MutantFailure> failures;
  std::map<std::string, std::size_t> attempted;
  std::map<std::string, std::size_t> produced;
};

/// Writes `<dir>/<id>.nmm` and `<dir>/<id>.json` for every mutant, creating
/// the directory if needed. The sidecar holds the provenance plus the
/// mutant's own model_checksum.
void write_mutants(const std::filesystem::path& dir, const std::vector<MutantRecord>& mutants);
void write_mutant(const std::filesystem::path& dir, const MutantRecord& mutant);

/// Loads every `<id>.nmm` with a sidecar from `dir`, ordered by id.
std::vector<MutantRecord> load_mutants(const std::filesystem::path& dir);

std::string provenance_json(const Provenance& p, const std::string& id, const std::string& model_checksum);
Provenance parse_provenance(const std::string& text);

}  // namespace dlmut
