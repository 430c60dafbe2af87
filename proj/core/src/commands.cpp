#include "dlmut/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dlmut/layer_ops.hpp"
#include "dlmut/model_mutators.hpp"
#include "dlmut/report.hpp"
#include "dlmut/rng.hpp"
#include "dlmut/sampling.hpp"
#include "dlmut/serialize.hpp"
#include "dlmut/source_mutators.hpp"

namespace dlmut {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::kConfig, what); }

void check_ratio(const char* key, double v) {
  if (!(v > 0.0 && v <= 1.0)) config_error(std::string(key) + " must be in (0, 1]");
}

}  // namespace

void RunConfig::validate() const {
  if (dataset != "mnist" && dataset != "csv" && dataset != "blobs") {
    config_error("dataset must be mnist, csv or blobs, not '" + dataset + "'");
  }
  if (dataset == "csv" && (train_csv.empty() || test_csv.empty())) config_error("csv needs train_csv and test_csv");
  check_ratio("ratio", ratio);
  check_ratio("qc_threshold", qc_threshold);
  if (!(learning_rate > 0.0)) config_error("learning_rate must be positive");
  if (batch_size == 0) config_error("batch_size must be positive");
  if (!(np_sigma >= 0.0)) config_error("np_sigma must be non-negative");
  if (!(gf_sigma >= 0.0)) config_error("gf_sigma must be non-negative");
  if (dataset == "blobs" && (blob_classes < 2 || blob_dim == 0 || blob_train == 0 || blob_test == 0)) {
    config_error("blobs need at least 2 classes, 1 dimension and non-empty splits");
  }
}

TrainConfig RunConfig::train_config() const {
  return {epochs, batch_size, learning_rate, derive_seed(seed, "train"), shuffle_each_epoch};
}

std::vector<std::string> RunConfig::operator_list() const {
  std::vector<std::string> out;
  std::stringstream ss(operators);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (!parse_data_op(item) && !parse_program_op(item) && !parse_model_op(item)) {
      config_error("unknown operator '" + item + "'");
    }
    out.push_back(item);
  }
  return out;
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kBadMagic:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kTruncated:
    case ErrorKind::kVersionMismatch:
    case ErrorKind::kChecksumFailure:
    case ErrorKind::kMalformedManifest:
      return 3;
    case ErrorKind::kDivergence:
      return 4;
    case ErrorKind::kNoPassingTests:
    case ErrorKind::kEmptyDataset:
      return 5;
    case ErrorKind::kEmptyMutantSet:
      return 6;
    default:
      return 1;
  }
}

namespace {

Dataset head(const Dataset& data, std::size_t limit) {
  if (limit == 0 || limit >= data.size()) return data;
  std::vector<std::size_t> idx(limit);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return data.subset(idx);
}

}  // namespace

Datasets load_datasets(const RunConfig& cfg) {
  cfg.validate();
  Datasets out;
  if (cfg.dataset == "mnist") {
    out.train = load_idx(cfg.data_dir / "train-images-idx3-ubyte", cfg.data_dir / "train-labels-idx1-ubyte");
    out.test = load_idx(cfg.data_dir / "t10k-images-idx3-ubyte", cfg.data_dir / "t10k-labels-idx1-ubyte");
  } else if (cfg.dataset == "csv") {
    out.train = load_csv(cfg.train_csv, cfg.num_classes);
    out.test = load_csv(cfg.test_csv, cfg.num_classes == 0 ? out.train.num_classes : cfg.num_classes);
    if (out.test.sample_shape() != out.train.sample_shape()) {
      throw Error(ErrorKind::kDimensionMismatch, "train and test CSV feature counts differ");
    }
  } else {
    BlobConfig b{cfg.blob_classes, cfg.blob_dim, cfg.blob_train, cfg.blob_spread, derive_seed(cfg.seed, "blobs-train")};
    out.train = make_blobs(b);
    b.samples = cfg.blob_test;
    b.seed = derive_seed(cfg.seed, "blobs-test");
    out.test = make_blobs(b);
  }
  out.train = head(out.train, cfg.train_limit);
  out.test = head(out.test, cfg.test_limit);
  return out;
}

namespace {

ModelSpec spec_for(const RunConfig& cfg, const Dataset& train) {
  try {
    return parse_architecture(cfg.arch, train.sample_shape(), train.num_classes);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, std::string("arch: ") + e.what());
  }
}

TrainLogger epoch_printer(std::ostream& log) {
  return [&log](const EpochLog& e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.6f accuracy=%.4f\n", e.epoch, e.loss, e.accuracy);
    log << buf << std::flush;
  };
}

}  // namespace

TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto data = load_datasets(cfg);
  const auto spec = spec_for(cfg, data.train);
  log << "training " << describe(spec) << " on " << data.train.size() << " samples\n";
  auto model = train(spec, data.train, cfg.train_config(), epoch_printer(log));
  TrainOutcome out{std::move(model)};
  out.train_accuracy = evaluate_accuracy(out.model, data.train);
  out.test_accuracy = evaluate_accuracy(out.model, data.test);
  save_model(out.model, cfg.model);
  out.checksum = model_checksum(out.model);
  char buf[128];
  std::snprintf(buf, sizeof buf, "train_accuracy=%.4f test_accuracy=%.4f checksum=%s\n", out.train_accuracy,
                out.test_accuracy, out.checksum.c_str());
  log << buf << "saved " << cfg.model.string() << "\n";
  return out;
}

namespace {

std::vector<std::string> ops_for_level(const std::vector<std::string>& ops, MutationLevel level) {
  std::vector<std::string> out;
  for (const auto& op : ops) {
    const bool source = parse_data_op(op) || parse_program_op(op);
    if (source == (level == MutationLevel::kSource)) out.push_back(op);
  }
  return out;
}

std::string failures_json(const MutantBatch& batch) {
  json arr = json::array();
  for (const auto& f : batch.failures) {
    arr.push_back({{"id", f.id}, {"op", f.provenance.op}, {"seed", f.provenance.seed}, {"reason", f.reason}});
  }
  return json{{"attempted", batch.attempted}, {"produced", batch.produced}, {"failures", arr}}.dump(1) + "\n";
}

}  // namespace

MutantBatch cmd_mutate(const RunConfig& cfg, MutationLevel level, std::ostream& log) {
  cfg.validate();
  const auto original = load_model(cfg.model);
  const auto checksum = model_checksum(original);
  const auto all_ops = cfg.operator_list();
  auto ops = ops_for_level(all_ops, level);
  if (!all_ops.empty() && ops.empty()) {
    config_error("none of the selected operators is a " + std::string(to_string(level)) + "-level operator");
  }

  MutantBatch batch;
  if (level == MutationLevel::kModel) {
    ModelMutationConfig mc;
    mc.budget = cfg.model_budget;
    mc.layer_budget = cfg.layer_budget;
    mc.ratio = cfg.ratio;
    if (cfg.gf_sigma > 0.0) mc.gf_sigma = cfg.gf_sigma;
    mc.operators = ops;
    mc.parent_checksum = checksum;
    batch = generate_model_mutants(original, mc, derive_seed(cfg.seed, "model-mutants"));
  } else {
    const auto data = load_datasets(cfg);
    SourceMutationConfig sc;
    sc.data_budget = cfg.source_budget;
    sc.program_budget = cfg.program_budget;
    sc.ratio = cfg.ratio;
    sc.noise_sigma = cfg.np_sigma;
    sc.operators = ops;
    sc.parent_checksum = checksum;
    batch = generate_source_mutants(data.train, original.spec(), cfg.train_config(), sc,
                                    derive_seed(cfg.seed, "source-mutants"),
                                    [&log](const std::string& id, bool ok, const std::string& detail) {
                                      log << id << (ok ? " ok" : " failed: ") << (ok ? "" : detail) << "\n"
                                          << std::flush;
                                    });
  }

  std::filesystem::create_directories(cfg.mutant_dir);
  write_mutants(cfg.mutant_dir, batch.mutants);
  write_text(cfg.mutant_dir / (std::string(to_string(level)) + "-failures.json"), failures_json(batch));
  for (const auto& [op, n] : batch.attempted) {
    const auto it = batch.produced.find(op);
    log << op << ": " << (it == batch.produced.end() ? 0 : it->second) << " of " << n << " produced\n";
  }
  log << batch.mutants.size() << " mutants written to " << cfg.mutant_dir.string() << "\n";
  return batch;
}

namespace {

std::vector<MutantRecord> load_nonempty_mutants(const RunConfig& cfg) {
  if (!std::filesystem::is_directory(cfg.mutant_dir)) {
    throw Error(ErrorKind::kIo, "mutant directory " + cfg.mutant_dir.string() + " does not exist");
  }
  auto mutants = load_mutants(cfg.mutant_dir);
  if (mutants.empty()) throw Error(ErrorKind::kEmptyMutantSet, "no mutants in " + cfg.mutant_dir.string());
  return mutants;
}

}  // namespace

EvaluationOutcome cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto original = load_model(cfg.model);
  const auto mutants = load_nonempty_mutants(cfg);
  const auto data = load_datasets(cfg);
  const auto passed = filter_passed(original, data.test);
  log << "T' holds " << passed.samples.size() << " of " << data.test.size() << " test samples\n";

  std::vector<KillRow> rows;
  for (const auto& m : mutants) {
    const auto preds = predict_all(m.model, passed.samples);
    rows.push_back(make_kill_row(m.id, m.provenance.op, model_checksum(m.model), passed.samples.labels, preds,
                                 passed.samples.num_classes));
  }
  auto matrix = make_kill_matrix(passed.samples.labels, passed.samples.num_classes, std::move(rows));
  matrix.test_size = data.test.size();
  apply_quality_control(matrix, cfg.qc_threshold);
  if (matrix.rows.empty()) {
    write_text(cfg.report_dir / "killmatrix.json", kill_matrix_json(matrix));
    throw Error(ErrorKind::kEmptyMutantSet, "all " + std::to_string(matrix.excluded.size()) +
                                                " mutants exceed the QC threshold");
  }
  auto report = make_report(matrix);
  write_report_files(cfg.report_dir, matrix, report);
  log << report_table(report);
  return {std::move(matrix), std::move(report)};
}

namespace {

SampleScore score_sample(const std::vector<std::size_t>& indices, const Dataset& source,
                         const std::vector<int>& original_preds, const std::vector<const MutantRecord*>& kept,
                         const std::vector<std::vector<int>>& kept_preds) {
  SampleScore s;
  s.size = indices.size();
  std::vector<std::size_t> passed;
  std::vector<int> labels;
  for (auto i : indices) {
    if (original_preds[i] == source.labels[i]) {
      passed.push_back(i);
      labels.push_back(source.labels[i]);
    }
  }
  s.passed = passed.size();
  if (passed.empty()) throw Error(ErrorKind::kNoPassingTests, "a sampled test set has no passing sample");
  std::vector<KillRow> rows;
  std::vector<int> preds(passed.size());
  for (std::size_t m = 0; m < kept.size(); ++m) {
    for (std::size_t j = 0; j < passed.size(); ++j) preds[j] = kept_preds[m][passed[j]];
    rows.push_back(make_kill_row(kept[m]->id, kept[m]->provenance.op, "", labels, preds, source.num_classes));
  }
  const auto matrix = make_kill_matrix(labels, source.num_classes, std::move(rows));
  const auto report = make_report(matrix);
  s.score = report.mutation_score;
  s.aer = report.aer;
  for (const auto& [op, m] : report.per_operator) {
    if (m.score) s.operator_score[op] = *m.score;
    if (m.aer) s.operator_aer[op] = *m.aer;
  }
  return s;
}

}  // namespace

ExperimentOutcome run_experiment(const TrainedModel& original, const std::vector<MutantRecord>& mutants,
                                 const Datasets& data, const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (mutants.empty()) throw Error(ErrorKind::kEmptyMutantSet, "no mutants to evaluate");
  ExperimentOutcome out;
  out.mutants_total = mutants.size();

  // QC against T' of the whole test set.
  const auto test_preds = predict_all(original, data.test);
  const auto passed = filter_passed(data.test, test_preds);
  std::vector<const MutantRecord*> kept;
  std::vector<std::vector<int>> kept_test_preds;
  for (const auto& m : mutants) {
    auto preds = predict_all(m.model, data.test);
    std::size_t wrong = 0;
    for (auto i : passed.source_indices) wrong += preds[i] != data.test.labels[i];
    const double rate = static_cast<double>(wrong) / static_cast<double>(passed.source_indices.size());
    if (rate > cfg.qc_threshold) continue;
    kept.push_back(&m);
    kept_test_preds.push_back(std::move(preds));
  }
  out.mutants_excluded = mutants.size() - kept.size();
  log << "QC kept " << kept.size() << " of " << mutants.size() << " mutants\n" << std::flush;
  if (kept.empty()) throw Error(ErrorKind::kEmptyMutantSet, "every mutant exceeds the QC threshold");

  const ControlledSizes sizes{cfg.train_sample_size, cfg.test_sample_size};
  const auto pairs = make_controlled_pairs(data.train, data.test, cfg.repetitions, derive_seed(cfg.seed, "sampling"),
                                           sizes);
  std::vector<int> train_preds;
  std::vector<std::vector<int>> kept_train_preds;
  if (cfg.train_sample_size > 0 && cfg.repetitions > 0) {
    train_preds = predict_all(original, data.train);
    for (const auto* m : kept) kept_train_preds.push_back(predict_all(m->model, data.train));
  }

  for (const auto& pair : pairs) {
    const bool from_train = pair.source == SampleSource::kTrain;
    const auto& source = from_train ? data.train : data.test;
    const auto& orig = from_train ? train_preds : test_preds;
    const auto& mp = from_train ? kept_train_preds : kept_test_preds;
    PairOutcome po{pair.setting, pair.repetition, pair.favored_class};
    po.uniform = score_sample(pair.uniform, source, orig, kept, mp);
    po.nonuniform = score_sample(pair.nonuniform, source, orig, kept, mp);
    char buf[160];
    std::snprintf(buf, sizeof buf, "setting %d rep %zu favored %d: uniform %.4f/%.4f non-uniform %.4f/%.4f\n",
                  po.setting, po.repetition, po.favored_class, po.uniform.score, po.uniform.aer, po.nonuniform.score,
                  po.nonuniform.aer);
    log << buf << std::flush;
    out.pairs.push_back(std::move(po));
  }

  std::map<int, std::size_t> counts;
  for (const auto& p : out.pairs) {
    auto& m = out.means[p.setting];
    m.uniform_score += p.uniform.score;
    m.uniform_aer += p.uniform.aer;
    m.nonuniform_score += p.nonuniform.score;
    m.nonuniform_aer += p.nonuniform.aer;
    ++counts[p.setting];
  }
  for (auto& [setting, m] : out.means) {
    const double n = static_cast<double>(counts[setting]);
    m.uniform_score /= n;
    m.uniform_aer /= n;
    m.nonuniform_score /= n;
    m.nonuniform_aer /= n;
  }
  return out;
}

ExperimentOutcome cmd_experiment(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto original = load_model(cfg.model);
  const auto mutants = load_nonempty_mutants(cfg);
  const auto data = load_datasets(cfg);
  auto out = run_experiment(original, mutants, data, cfg, log);
  write_text(cfg.report_dir / "experiment.json", experiment_json(out));
  write_text(cfg.report_dir / "experiment.txt", experiment_table(out));
  log << experiment_table(out);
  return out;
}

namespace {

json sample_json(const SampleScore& s) {
  return {{"size", s.size},
          {"passed", s.passed},
          {"mutation_score", s.score},
          {"aer", s.aer},
          {"per_operator_score", s.operator_score},
          {"per_operator_aer", s.operator_aer}};
}

}  // namespace

std::string experiment_json(const ExperimentOutcome& outcome) {
  json pairs = json::array();
  for (const auto& p : outcome.pairs) {
    pairs.push_back({{"setting", p.setting},
                     {"repetition", p.repetition},
                     {"favored_class", p.favored_class},
                     {"uniform", sample_json(p.uniform)},
                     {"nonuniform", sample_json(p.nonuniform)}});
  }
  json means = json::object();
  for (const auto& [setting, m] : outcome.means) {
    means[std::to_string(setting)] = {{"uniform_score", m.uniform_score},
                                      {"uniform_aer", m.uniform_aer},
                                      {"nonuniform_score", m.nonuniform_score},
                                      {"nonuniform_aer", m.nonuniform_aer}};
  }
  return json{{"mutants_total", outcome.mutants_total},
              {"mutants_excluded", outcome.mutants_excluded},
              {"pairs", pairs},
              {"means", means}}
             .dump(1) +
         "\n";
}

std::string experiment_table(const ExperimentOutcome& outcome) {
  std::ostringstream out;
  char buf[160];
  out << "mutants: " << outcome.mutants_total << " total, " << outcome.mutants_excluded << " excluded by QC\n";
  out << "setting rep favored  uni.sc.  uni.err.  non.sc.  non.err.\n";
  for (const auto& p : outcome.pairs) {
    std::snprintf(buf, sizeof buf, "%7d %3zu %7d %8.2f %9.2f %8.2f %9.2f\n", p.setting, p.repetition,
                  p.favored_class, 100 * p.uniform.score, 100 * p.uniform.aer, 100 * p.nonuniform.score,
                  100 * p.nonuniform.aer);
    out << buf;
  }
  for (const auto& [setting, m] : outcome.means) {
    std::snprintf(buf, sizeof buf, "%7d mean        %8.2f %9.2f %8.2f %9.2f\n", setting, 100 * m.uniform_score,
                  100 * m.uniform_aer, 100 * m.nonuniform_score, 100 * m.nonuniform_aer);
    out << buf;
  }
  return out.str();
}

MutationReport cmd_report(const RunConfig& cfg, std::ostream& log) {
  const auto matrix = parse_kill_matrix(read_text(cfg.report_dir / "killmatrix.json"));
  auto report = make_report(matrix);
  write_text(cfg.report_dir / "report.json", report_json(report));
  write_text(cfg.report_dir / "report.txt", report_table(report));
  log << report_table(report);
  return report;
}

}  // namespace dlmut
