#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dlmut/dataset.hpp"
#include "dlmut/model.hpp"
#include "dlmut/mutant.hpp"
#include "dlmut/trainer.hpp"

namespace dlmut {

/// Data-level operators: Data Repetition, Label Error, Data Missing, Data
/// Shuffle, Noise Perturbation.
enum class DataOpKind { kDR, kLE, kDM, kDF, kNP };

/// Program-level operators: Layer Removal, Layer Addition, Activation
/// Function Removal.
enum class ProgramOpKind { kLR, kLA, kAFR };

const char* to_string(DataOpKind kind) noexcept;
const char* to_string(ProgramOpKind kind) noexcept;
std::optional<DataOpKind> parse_data_op(std::string_view name) noexcept;
std::optional<ProgramOpKind> parse_program_op(std::string_view name) noexcept;

inline constexpr double kDefaultMutationRatio = 0.01;
inline constexpr double kDefaultNoiseSigma = 0.1;

struct DataOp {
  DataOpKind kind = DataOpKind::kDR;
  std::optional<int> local_class;  // unset: global scope
  double ratio = kDefaultMutationRatio;
  std::optional<double> noise_sigma;  // required for NP
  std::uint64_t seed = 0;

  void validate(const Dataset& data) const;
};

struct ProgramOp {
  ProgramOpKind kind = ProgramOpKind::kLR;
  std::optional<std::size_t> target;
  std::uint64_t seed = 0;
};

struct DataMutation {
  Dataset data;
  std::size_t affected = 0;
};

/// The pool is every sample (global) or the samples of local_class, and
/// k = ceil(ratio * |pool|) distinct pool members are selected:
///   DR appends copies of them; LE relabels each to a uniformly drawn other
///   class; DM removes them (refusing to empty a class); DF permutes them
///   among their own positions; NP adds N(0, sigma^2) to every value and
///   clips to [0, 1].
/// Unselected samples are left bitwise identical.
DataMutation mutate_data(const Dataset& data, const DataOp& op);

/// LR removes a shape-preserving hidden layer, LA_s adds one (see
/// LayerEdit::kAdd) and AFR_s sets a hidden activation to Identity. Without
/// a target one eligible layer is drawn uniformly. Throws
/// kNoEligibleTarget when nothing qualifies.
ModelSpec mutate_program(const ModelSpec& spec, const ProgramOp& op);

std::vector<std::size_t> program_targets(const ModelSpec& spec, ProgramOpKind kind);

struct SourceMutationConfig {
  std::size_t data_budget = 20;     // per data operator, split evenly global/local
  std::size_t program_budget = 20;  // per program operator, capped by eligible layers
  double ratio = kDefaultMutationRatio;
  double noise_sigma = kDefaultNoiseSigma;
  std::vector<std::string> operators;  // empty: all eight
  std::string parent_checksum;
};

using MutantProgress = std::function<void(const std::string& id, bool ok, const std::string& detail)>;

/// Mutates the training data or program and retrains each mutant with
/// `train_cfg`. Training failures are recorded per mutant and do not stop
/// the batch.
MutantBatch generate_source_mutants(const Dataset& data, const ModelSpec& spec, const TrainConfig& train_cfg,
                                    const SourceMutationConfig& cfg, std::uint64_t seed,
                                    const MutantProgress& progress = {});

}  // namespace dlmut
