#include "dlmut/source_mutators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dlmut/error.hpp"
#include "dlmut/rng.hpp"
#include "dlmut/structure.hpp"

namespace dlmut {

const char* to_string(DataOpKind kind) noexcept {
  switch (kind) {
    case DataOpKind::kDR: return "DR";
    case DataOpKind::kLE: return "LE";
    case DataOpKind::kDM: return "DM";
    case DataOpKind::kDF: return "DF";
    case DataOpKind::kNP: return "NP";
  }
  return "?";
}

const char* to_string(ProgramOpKind kind) noexcept {
  switch (kind) {
    case ProgramOpKind::kLR: return "LR";
    case ProgramOpKind::kLA: return "LA_s";
    case ProgramOpKind::kAFR: return "AFR_s";
  }
  return "?";
}

std::optional<DataOpKind> parse_data_op(std::string_view name) noexcept {
  for (auto k : {DataOpKind::kDR, DataOpKind::kLE, DataOpKind::kDM, DataOpKind::kDF, DataOpKind::kNP}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

std::optional<ProgramOpKind> parse_program_op(std::string_view name) noexcept {
  for (auto k : {ProgramOpKind::kLR, ProgramOpKind::kLA, ProgramOpKind::kAFR}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

void DataOp::validate(const Dataset& data) const {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "mutation ratio must be in (0, 1]");
  if (local_class) {
    if (*local_class < 0 || static_cast<std::size_t>(*local_class) >= data.num_classes ||
        data.indices_of_class(*local_class).empty()) {
      throw Error(ErrorKind::kInvalidArgument, "local scope names absent class " + std::to_string(*local_class));
    }
  }
  if (kind == DataOpKind::kNP && (!noise_sigma || !(*noise_sigma > 0.0))) {
    throw Error(ErrorKind::kInvalidArgument, "NP needs a positive noise sigma");
  }
  if (kind == DataOpKind::kLE && data.num_classes < 2) {
    throw Error(ErrorKind::kInvalidArgument, "LE needs at least two classes");
  }
}

DataMutation mutate_data(const Dataset& data, const DataOp& op) {
  data.validate();
  op.validate(data);
  Rng rng(derive_seed(op.seed, to_string(op.kind)));

  std::vector<std::size_t> pool;
  if (op.local_class) {
    pool = data.indices_of_class(*op.local_class);
  } else {
    pool.resize(data.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
  }
  const auto k = selection_count(op.ratio, pool.size());
  auto picked = sample_from(pool, k, rng);
  std::shuffle(picked.begin(), picked.end(), rng);

  switch (op.kind) {
    case DataOpKind::kDR: {
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      order.insert(order.end(), picked.begin(), picked.end());
      return {data.subset(order), k};
    }
    case DataOpKind::kLE: {
      Dataset out = data;
      std::uniform_int_distribution<int> other(0, static_cast<int>(data.num_classes) - 2);
      for (auto i : picked) {
        int label = other(rng);
        if (label >= data.labels[i]) ++label;
        out.labels[i] = label;
      }
      return {std::move(out), k};
    }
    case DataOpKind::kDM: {
      std::vector<char> drop(data.size(), 0);
      for (auto i : picked) drop[i] = 1;
      std::vector<std::size_t> keep;
      keep.reserve(data.size() - k);
      auto remaining = data.class_counts();
      for (auto i : picked) --remaining[static_cast<std::size_t>(data.labels[i])];
      const auto before = data.class_counts();
      for (std::size_t c = 0; c < remaining.size(); ++c) {
        if (before[c] > 0 && remaining[c] == 0) {
          throw Error(ErrorKind::kInvalidArgument, "DM would remove every sample of class " + std::to_string(c));
        }
      }
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!drop[i]) keep.push_back(i);
      }
      return {data.subset(keep), k};
    }
    case DataOpKind::kDF: {
      auto targets = picked;
      std::sort(targets.begin(), targets.end());
      auto sources = targets;
      std::shuffle(sources.begin(), sources.end(), rng);
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t n = 0; n < targets.size(); ++n) order[targets[n]] = sources[n];
      return {data.subset(order), k};
    }
    case DataOpKind::kNP: {
      Dataset out = data;
      std::normal_distribution<double> noise(0.0, *op.noise_sigma);
      const auto stride = data.sample_size();
      std::sort(picked.begin(), picked.end());
      for (auto i : picked) {
        float* values = out.features.data() + i * stride;
        for (std::size_t j = 0; j < stride; ++j) {
          values[j] = static_cast<float>(std::clamp(double(values[j]) + noise(rng), 0.0, 1.0));
        }
      }
      return {std::move(out), k};
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown data operator");
}

namespace {

LayerEdit edit_for(ProgramOpKind kind) {
  switch (kind) {
    case ProgramOpKind::kLR: return LayerEdit::kRemove;
    case ProgramOpKind::kLA: return LayerEdit::kAdd;
    case ProgramOpKind::kAFR: return LayerEdit::kDeactivate;
  }
  return LayerEdit::kRemove;
}

std::string mutant_id(std::string_view op, std::string_view scope, std::size_t index) {
  std::string name(op);
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", index);
  return name + (scope.empty() ? "" : "-" + std::string(scope)) + "-" + buf;
}

bool wanted(const std::vector<std::string>& ops, std::string_view name) {
  return ops.empty() || std::find(ops.begin(), ops.end(), name) != ops.end();
}

}  // namespace

std::vector<std::size_t> program_targets(const ModelSpec& spec, ProgramOpKind kind) {
  return eligible_layers(spec, edit_for(kind));
}

ModelSpec mutate_program(const ModelSpec& spec, const ProgramOp& op) {
  validate(spec);
  const auto targets = program_targets(spec, op.kind);
  if (targets.empty()) {
    throw Error(ErrorKind::kNoEligibleTarget, std::string(to_string(op.kind)) + ": no eligible layer");
  }
  std::size_t target = 0;
  if (op.target) {
    if (std::find(targets.begin(), targets.end(), *op.target) == targets.end()) {
      throw Error(ErrorKind::kInvalidArgument, std::string(to_string(op.kind)) + ": layer " +
                                                   std::to_string(*op.target) + " is not eligible");
    }
    target = *op.target;
  } else {
    Rng rng(derive_seed(op.seed, to_string(op.kind)));
    std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
    target = targets[pick(rng)];
  }
  return edit_spec(spec, edit_for(op.kind), target);
}

MutantBatch generate_source_mutants(const Dataset& data, const ModelSpec& spec, const TrainConfig& train_cfg,
                                    const SourceMutationConfig& cfg, std::uint64_t seed,
                                    const MutantProgress& progress) {
  data.validate();
  validate(spec);
  MutantBatch batch;

  auto run = [&](const std::string& id, Provenance prov, const std::function<TrainedModel(Provenance&)>& make) {
    ++batch.attempted[prov.op];
    try {
      TrainedModel model = make(prov);
      ++batch.produced[prov.op];
      if (progress) progress(id, true, "");
      batch.mutants.push_back({id, std::move(prov), std::move(model)});
    } catch (const Error& e) {
      if (progress) progress(id, false, e.what());
      batch.failures.push_back({id, std::move(prov), e.what()});
    }
  };

  // Classes that can host a local mutation.
  std::vector<int> classes;
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) classes.push_back(static_cast<int>(c));
  }

  for (auto kind : {DataOpKind::kDR, DataOpKind::kLE, DataOpKind::kDM, DataOpKind::kDF, DataOpKind::kNP}) {
    const std::string name = to_string(kind);
    if (!wanted(cfg.operators, name)) continue;
    const std::size_t global = (cfg.data_budget + 1) / 2;
    for (std::size_t i = 0; i < cfg.data_budget; ++i) {
      const bool local = i >= global;
      const auto op_seed = derive_seed(seed, name + (local ? "-local" : "-global"), i);
      DataOp op{kind, std::nullopt, cfg.ratio, std::nullopt, op_seed};
      if (kind == DataOpKind::kNP) op.noise_sigma = cfg.noise_sigma;
      if (local) {
        Rng rng(derive_seed(op_seed, "class"));
        std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);
        op.local_class = classes[pick(rng)];
      }
      Provenance prov;
      prov.op = name;
      prov.level = MutationLevel::kSource;
      prov.scope = local ? "local" : "global";
      prov.local_class = op.local_class;
      prov.ratio = cfg.ratio;
      if (op.noise_sigma) prov.sigma = op.noise_sigma;
      prov.seed = op_seed;
      prov.parent_checksum = cfg.parent_checksum;
      const auto id = mutant_id(name, prov.scope, local ? i - global : i);
      run(id, std::move(prov), [&](Provenance& p) {
        auto mutated = mutate_data(data, op);
        p.affected = mutated.affected;
        return train(spec, mutated.data, train_cfg);
      });
    }
  }

  for (auto kind : {ProgramOpKind::kLR, ProgramOpKind::kLA, ProgramOpKind::kAFR}) {
    const std::string name = to_string(kind);
    if (!wanted(cfg.operators, name)) continue;
    // Each eligible layer yields at most one mutant: retraining the same
    // program twice would reproduce the same model.
    auto targets = program_targets(spec, kind);
    Rng rng(derive_seed(seed, name));
    std::shuffle(targets.begin(), targets.end(), rng);
    if (targets.size() > cfg.program_budget) targets.resize(cfg.program_budget);
    if (targets.empty() && cfg.program_budget > 0) {
      ++batch.attempted[name];
      Provenance prov;
      prov.op = name;
      prov.level = MutationLevel::kSource;
      prov.scope = "global";
      prov.parent_checksum = cfg.parent_checksum;
      batch.failures.push_back({mutant_id(name, "", 0), prov, "no eligible layer"});
      if (progress) progress(mutant_id(name, "", 0), false, "no eligible layer");
      continue;
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto op_seed = derive_seed(seed, name, i);
      ProgramOp op{kind, targets[i], op_seed};
      Provenance prov;
      prov.op = name;
      prov.level = MutationLevel::kSource;
      prov.scope = "global";
      prov.seed = op_seed;
      prov.target_layer = targets[i];
      prov.affected = 1;
      prov.parent_checksum = cfg.parent_checksum;
      run(mutant_id(name, "", i), std::move(prov),
          [&](Provenance&) { return train(mutate_program(spec, op), data, train_cfg); });
    }
  }
  return batch;
}

}  // namespace dlmut
