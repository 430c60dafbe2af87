#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "dlmut/analysis.hpp"
#include "dlmut/dataset.hpp"
#include "dlmut/error.hpp"
#include "dlmut/model.hpp"
#include "dlmut/mutant.hpp"
#include "dlmut/trainer.hpp"

namespace dlmut {

/// Every field is a config-file key and a CLI flag of the same name.
struct RunConfig {
  std::string dataset = "mnist";  // mnist | csv | blobs
  std::filesystem::path data_dir = "data/mnist";
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  std::size_t train_limit = 10000;  // first N training samples; 0 keeps all
  std::size_t test_limit = 0;
  std::size_t num_classes = 0;  // csv only; 0 infers from labels

  std::size_t blob_classes = 3;
  std::size_t blob_dim = 8;
  std::size_t blob_train = 600;
  std::size_t blob_test = 300;
  double blob_spread = 0.1;

  std::string arch = "flatten,dense:128:relu,dense:64:relu,dense:10:softmax";
  std::filesystem::path model = "out/model.nmm";
  std::filesystem::path mutant_dir = "out/mutants";
  std::filesystem::path report_dir = "out/report";

  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  bool shuffle_each_epoch = true;

  std::size_t source_budget = 20;
  std::size_t program_budget = 20;
  std::size_t model_budget = 50;
  std::size_t layer_budget = 50;
  double ratio = 0.01;
  double np_sigma = 0.1;
  double gf_sigma = 0.0;  // 0 picks half the weight standard deviation
  double qc_threshold = 0.20;
  std::string operators;  // comma-separated subset; empty means all

  std::size_t repetitions = 5;
  std::size_t train_sample_size = 5000;
  std::size_t test_sample_size = 1000;

  std::uint64_t seed = 0;

  /// kConfig on out-of-range values.
  void validate() const;
  TrainConfig train_config() const;
  std::vector<std::string> operator_list() const;
};

/// Process exit code per error kind: 2 config/argument, 3 I/O and file
/// format, 4 divergence, 5 empty T', 6 empty mutant set, 1 anything else.
int exit_code(ErrorKind kind) noexcept;

struct Datasets {
  Dataset train;
  Dataset test;
};

Datasets load_datasets(const RunConfig& cfg);

struct TrainOutcome {
  TrainedModel model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::string checksum;
};

/// Trains the configured architecture and saves it to cfg.model.
TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& log);

/// Generates mutants of cfg.model into cfg.mutant_dir and writes
/// failures.json alongside them.
MutantBatch cmd_mutate(const RunConfig& cfg, MutationLevel level, std::ostream& log);

struct EvaluationOutcome {
  KillMatrix matrix;
  MutationReport report;
};

/// Filter, QC, kill matrix and metrics over the full test set; writes the
/// report files to cfg.report_dir.
EvaluationOutcome cmd_evaluate(const RunConfig& cfg, std::ostream& log);

/// Scores of one sampled test set.
struct SampleScore {
  std::size_t size = 0;
  std::size_t passed = 0;
  double score = 0.0;
  double aer = 0.0;
  std::map<std::string, double> operator_score;
  std::map<std::string, double> operator_aer;
};

struct PairOutcome {
  int setting = 0;
  std::size_t repetition = 0;
  int favored_class = 0;
  SampleScore uniform;
  SampleScore nonuniform;
};

struct ExperimentOutcome {
  std::size_t mutants_total = 0;
  std::size_t mutants_excluded = 0;
  std::vector<PairOutcome> pairs;

  struct Means {
    double uniform_score = 0.0;
    double uniform_aer = 0.0;
    double nonuniform_score = 0.0;
    double nonuniform_aer = 0.0;
  };
  std::map<int, Means> means;  // keyed by setting
};

/// Controlled uniform vs non-uniform comparison. QC uses T' of the full
/// test set; each sampled set is then scored against the survivors.
/// Writes experiment.json and experiment.txt to cfg.report_dir.
ExperimentOutcome cmd_experiment(const RunConfig& cfg, std::ostream& log);

/// Same as cmd_experiment but on models already in memory. No files are
/// written.
ExperimentOutcome run_experiment(const TrainedModel& original, const std::vector<MutantRecord>& mutants,
                                 const Datasets& data, const RunConfig& cfg, std::ostream& log);

std::string experiment_json(const ExperimentOutcome& outcome);
std::string experiment_table(const ExperimentOutcome& outcome);

/// Recomputes report.json and report.txt from cfg.report_dir/killmatrix.json.
MutationReport cmd_report(const RunConfig& cfg, std::ostream& log);

}  // namespace dlmut
