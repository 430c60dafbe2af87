#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlmut/dataset.hpp"
#include "dlmut/model.hpp"

namespace dlmut {

inline constexpr double kDefaultQcThreshold = 0.20;

/// T': the test samples the original model classifies correctly, in their
/// original order. `source_indices[i]` is the position of sample i in the
/// dataset it was filtered from.
struct PassedTestSet {
  Dataset samples;
  std::vector<std::size_t> source_indices;
};

/// Predicted labels of every sample in `data`.
std::vector<int> predict_all(const TrainedModel& model, const Dataset& data);

/// Throws kEmptyDataset on empty input and kNoPassingTests when nothing
/// passes.
PassedTestSet filter_passed(const Dataset& tests, std::span<const int> predictions);
PassedTestSet filter_passed(const TrainedModel& model, const Dataset& tests);

/// Fraction of positions where prediction != label. kEmptyDataset if empty.
double error_rate(std::span<const int> labels, std::span<const int> predictions);
double error_rate(const TrainedModel& mutant, const PassedTestSet& passed);

/// Classes c with at least one sample labelled c that is not predicted as c,
/// ascending. The labels must come from a T' of the original model.
std::vector<int> killed_classes(std::span<const int> labels, std::span<const int> predictions);
std::vector<int> killed_classes(const TrainedModel& mutant, const PassedTestSet& passed);

struct QcSplit {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> excluded;
};

/// Splits positions of `rates` by `rate > threshold` (strict). threshold
/// must be in (0, 1].
QcSplit quality_control(std::span<const double> rates, double threshold = kDefaultQcThreshold);

/// One mutant's behaviour on a T'. misses[c] counts samples of class c the
/// mutant gets wrong; class c is killed iff misses[c] > 0.
struct KillRow {
  std::string id;
  std::string op;
  std::string checksum;
  std::vector<std::size_t> misses;
  std::size_t errors = 0;
  std::size_t total = 0;

  bool killed(std::size_t c) const { return misses.at(c) > 0; }
  std::size_t killed_count() const;
  double error_rate() const;
};

KillRow make_kill_row(std::string id, std::string op, std::string checksum, std::span<const int> labels,
                      std::span<const int> predictions, std::size_t num_classes);

struct ExcludedMutant {
  std::string id;
  std::string op;
  std::string checksum;
  double error_rate = 0.0;
  std::string reason;
};

/// Rows are ordered by mutant id. class_support[c] is the number of T'
/// samples labelled c; a class with zero support can never be killed.
struct KillMatrix {
  std::size_t num_classes = 0;
  std::size_t test_size = 0;  // |T| before filtering, 0 if unknown
  std::vector<std::size_t> class_support;
  std::vector<KillRow> rows;
  std::vector<ExcludedMutant> excluded;

  /// Throws kInvalidArgument if rows disagree with the supports.
  void validate() const;
};

KillMatrix make_kill_matrix(std::span<const int> labels, std::size_t num_classes, std::vector<KillRow> rows);

/// Moves rows whose error rate exceeds `threshold` into `excluded`. Kept
/// rows are untouched.
void apply_quality_control(KillMatrix& matrix, double threshold = kDefaultQcThreshold);

/// sum_m |killed(m)| / (M * |C|). kEmptyMutantSet if there are no rows.
double mutation_score(const KillMatrix& matrix);
/// Mean row error rate, summed in row order. kEmptyMutantSet if no rows.
double ave_error_rate(const KillMatrix& matrix);

struct ClassMetrics {
  int label = 0;
  std::size_t support = 0;
  std::optional<double> score;  // unset (N/A) when support == 0
  std::optional<double> aer;
};

/// score_c = #mutants killing c / (M * |C|), so at most 1/|C|.
/// aer_c = mean over mutants of misses[c] / support[c].
std::vector<ClassMetrics> per_class_metrics(const KillMatrix& matrix);

struct OperatorMetrics {
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  std::optional<double> score;
  std::optional<double> aer;
};

struct MutationReport {
  double mutation_score = 0.0;
  double aer = 0.0;
  std::size_t num_classes = 0;
  std::size_t test_size = 0;
  std::size_t passed_size = 0;
  std::size_t generated = 0;
  std::size_t excluded = 0;
  std::size_t evaluated = 0;
  std::vector<ClassMetrics> per_class;
  std::map<std::string, OperatorMetrics> per_operator;
};

/// Builds the report from a post-QC kill matrix. kEmptyMutantSet if no row
/// survived.
MutationReport make_report(const KillMatrix& matrix);

}  // namespace dlmut
