#include "dlmut/analysis.hpp"

#include <algorithm>

#include "dlmut/error.hpp"
#include "dlmut/layer_ops.hpp"

namespace dlmut {

std::vector<int> predict_all(const TrainedModel& model, const Dataset& data) {
  Evaluator eval(model);
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = eval.predict(data.sample(i));
  return out;
}

PassedTestSet filter_passed(const Dataset& tests, std::span<const int> predictions) {
  if (tests.empty()) throw Error(ErrorKind::kEmptyDataset, "test set is empty");
  if (predictions.size() != tests.size()) {
    throw Error(ErrorKind::kShapeMismatch, "got " + std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(tests.size()) + " samples");
  }
  PassedTestSet out;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (predictions[i] == tests.labels[i]) out.source_indices.push_back(i);
  }
  if (out.source_indices.empty()) {
    throw Error(ErrorKind::kNoPassingTests, "the original model misclassifies all " + std::to_string(tests.size()) +
                                                " test samples");
  }
  out.samples = tests.subset(out.source_indices);
  return out;
}

PassedTestSet filter_passed(const TrainedModel& model, const Dataset& tests) {
  if (tests.empty()) throw Error(ErrorKind::kEmptyDataset, "test set is empty");
  return filter_passed(tests, predict_all(model, tests));
}

namespace {

void check_pair(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.empty()) throw Error(ErrorKind::kEmptyDataset, "T' is empty");
  if (labels.size() != predictions.size()) {
    throw Error(ErrorKind::kShapeMismatch, "labels and predictions differ in length");
  }
}

}  // namespace

double error_rate(std::span<const int> labels, std::span<const int> predictions) {
  check_pair(labels, predictions);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += labels[i] != predictions[i];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double error_rate(const TrainedModel& mutant, const PassedTestSet& passed) {
  const auto preds = predict_all(mutant, passed.samples);
  return error_rate(passed.samples.labels, preds);
}

std::vector<int> killed_classes(std::span<const int> labels, std::span<const int> predictions) {
  check_pair(labels, predictions);
  std::vector<int> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != predictions[i]) out.push_back(labels[i]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> killed_classes(const TrainedModel& mutant, const PassedTestSet& passed) {
  const auto preds = predict_all(mutant, passed.samples);
  return killed_classes(passed.samples.labels, preds);
}

QcSplit quality_control(std::span<const double> rates, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "QC threshold must be in (0, 1]");
  }
  QcSplit out;
  for (std::size_t i = 0; i < rates.size(); ++i) (rates[i] > threshold ? out.excluded : out.kept).push_back(i);
  return out;
}

std::size_t KillRow::killed_count() const {
  return static_cast<std::size_t>(std::count_if(misses.begin(), misses.end(), [](std::size_t m) { return m > 0; }));
}

double KillRow::error_rate() const {
  return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
}

KillRow make_kill_row(std::string id, std::string op, std::string checksum, std::span<const int> labels,
                      std::span<const int> predictions, std::size_t num_classes) {
  check_pair(labels, predictions);
  KillRow row{std::move(id), std::move(op), std::move(checksum), std::vector<std::size_t>(num_classes, 0), 0,
              labels.size()};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw Error(ErrorKind::kInvalidArgument, "label " + std::to_string(labels[i]) + " out of range");
    }
    if (labels[i] != predictions[i]) {
      ++row.misses[static_cast<std::size_t>(labels[i])];
      ++row.errors;
    }
  }
  return row;
}

void KillMatrix::validate() const {
  if (class_support.size() != num_classes) throw Error(ErrorKind::kInvalidArgument, "class_support size != |C|");
  std::size_t total = 0;
  for (auto s : class_support) total += s;
  for (const auto& row : rows) {
    if (row.misses.size() != num_classes || row.total != total) {
      throw Error(ErrorKind::kInvalidArgument, "kill row " + row.id + " does not match T'");
    }
    std::size_t errors = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (row.misses[c] > class_support[c]) {
        throw Error(ErrorKind::kInvalidArgument, "kill row " + row.id + " misses more samples than class holds");
      }
      errors += row.misses[c];
    }
    if (errors != row.errors) throw Error(ErrorKind::kInvalidArgument, "kill row " + row.id + " error count mismatch");
  }
}

KillMatrix make_kill_matrix(std::span<const int> labels, std::size_t num_classes, std::vector<KillRow> rows) {
  KillMatrix m;
  m.num_classes = num_classes;
  m.class_support.assign(num_classes, 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw Error(ErrorKind::kInvalidArgument, "label " + std::to_string(l) + " out of range");
    }
    ++m.class_support[static_cast<std::size_t>(l)];
  }
  std::stable_sort(rows.begin(), rows.end(), [](const KillRow& a, const KillRow& b) { return a.id < b.id; });
  m.rows = std::move(rows);
  m.validate();
  return m;
}

void apply_quality_control(KillMatrix& matrix, double threshold) {
  std::vector<double> rates;
  rates.reserve(matrix.rows.size());
  for (const auto& r : matrix.rows) rates.push_back(r.error_rate());
  const auto split = quality_control(rates, threshold);
  for (auto i : split.excluded) {
    const auto& r = matrix.rows[i];
    matrix.excluded.push_back({r.id, r.op, r.checksum, rates[i], "error rate above QC threshold"});
  }
  std::vector<KillRow> kept;
  kept.reserve(split.kept.size());
  for (auto i : split.kept) kept.push_back(std::move(matrix.rows[i]));
  matrix.rows = std::move(kept);
}

double mutation_score(const KillMatrix& matrix) {
  if (matrix.rows.empty()) throw Error(ErrorKind::kEmptyMutantSet, "no mutants to score");
  if (matrix.num_classes == 0) throw Error(ErrorKind::kInvalidArgument, "|C| is zero");
  std::size_t killed = 0;
  for (const auto& r : matrix.rows) killed += r.killed_count();
  return static_cast<double>(killed) / static_cast<double>(matrix.rows.size() * matrix.num_classes);
}

double ave_error_rate(const KillMatrix& matrix) {
  if (matrix.rows.empty()) throw Error(ErrorKind::kEmptyMutantSet, "no mutants to score");
  double sum = 0.0;
  for (const auto& r : matrix.rows) sum += r.error_rate();
  return sum / static_cast<double>(matrix.rows.size());
}

std::vector<ClassMetrics> per_class_metrics(const KillMatrix& matrix) {
  if (matrix.rows.empty()) throw Error(ErrorKind::kEmptyMutantSet, "no mutants to score");
  const double m = static_cast<double>(matrix.rows.size());
  std::vector<ClassMetrics> out;
  for (std::size_t c = 0; c < matrix.num_classes; ++c) {
    ClassMetrics cm{static_cast<int>(c), matrix.class_support[c], std::nullopt, std::nullopt};
    if (cm.support > 0) {
      std::size_t kills = 0;
      double rate_sum = 0.0;
      for (const auto& r : matrix.rows) {
        kills += r.killed(c);
        rate_sum += static_cast<double>(r.misses[c]) / static_cast<double>(cm.support);
      }
      cm.score = static_cast<double>(kills) / (m * static_cast<double>(matrix.num_classes));
      cm.aer = rate_sum / m;
    }
    out.push_back(cm);
  }
  return out;
}

MutationReport make_report(const KillMatrix& matrix) {
  MutationReport rep;
  rep.mutation_score = mutation_score(matrix);
  rep.aer = ave_error_rate(matrix);
  rep.num_classes = matrix.num_classes;
  rep.test_size = matrix.test_size;
  for (auto s : matrix.class_support) rep.passed_size += s;
  rep.evaluated = matrix.rows.size();
  rep.excluded = matrix.excluded.size();
  rep.generated = rep.evaluated + rep.excluded;
  rep.per_class = per_class_metrics(matrix);

  std::map<std::string, KillMatrix> by_op;
  for (const auto& r : matrix.rows) {
    auto& sub = by_op[r.op];
    sub.num_classes = matrix.num_classes;
    sub.class_support = matrix.class_support;
    sub.rows.push_back(r);
  }
  for (const auto& [op, sub] : by_op) {
    auto& om = rep.per_operator[op];
    om.evaluated = sub.rows.size();
    om.score = mutation_score(sub);
    om.aer = ave_error_rate(sub);
  }
  for (const auto& e : matrix.excluded) ++rep.per_operator[e.op].excluded;
  return rep;
}

}  // namespace dlmut
