#include "dlmut/model_mutators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

#include "dlmut/error.hpp"
#include "dlmut/rng.hpp"
#include "dlmut/structure.hpp"

namespace dlmut {

const char* to_string(ModelOpKind kind) noexcept {
  switch (kind) {
    case ModelOpKind::kGF: return "GF";
    case ModelOpKind::kWS: return "WS";
    case ModelOpKind::kNEB: return "NEB";
    case ModelOpKind::kNAI: return "NAI";
    case ModelOpKind::kNS: return "NS";
    case ModelOpKind::kLD: return "LD";
    case ModelOpKind::kLA: return "LA_m";
    case ModelOpKind::kAFR: return "AFR_m";
  }
  return "?";
}

std::optional<ModelOpKind> parse_model_op(std::string_view name) noexcept {
  for (auto k : {ModelOpKind::kGF, ModelOpKind::kWS, ModelOpKind::kNEB, ModelOpKind::kNAI, ModelOpKind::kNS,
                 ModelOpKind::kLD, ModelOpKind::kLA, ModelOpKind::kAFR}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

bool is_layer_level(ModelOpKind kind) noexcept {
  return kind == ModelOpKind::kLD || kind == ModelOpKind::kLA || kind == ModelOpKind::kAFR;
}

void ModelOp::validate() const {
  const bool wants_ratio = !is_layer_level(kind);
  if (ratio.has_value() != wants_ratio) {
    throw Error(ErrorKind::kInvalidArgument, std::string(to_string(kind)) +
                                                 (wants_ratio ? " needs a ratio" : " does not take a ratio"));
  }
  if (ratio && !(*ratio > 0.0 && *ratio <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "ratio must be in (0, 1]");
  if (gf_sigma.has_value() != (kind == ModelOpKind::kGF)) {
    throw Error(ErrorKind::kInvalidArgument, "gf_sigma is required for GF and only GF");
  }
  if (gf_sigma && !(*gf_sigma >= 0.0 && std::isfinite(*gf_sigma))) {
    throw Error(ErrorKind::kInvalidArgument, "gf_sigma must be finite and non-negative");
  }
  if (target_layer && !is_layer_level(kind)) {
    throw Error(ErrorKind::kInvalidArgument, "target_layer only applies to layer-level operators");
  }
}

std::vector<NeuronRef> neurons(const ModelSpec& spec) {
  std::vector<NeuronRef> out;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (!spec.layers[l].has_params()) continue;
    for (std::size_t u = 0; u < spec.layers[l].out; ++u) out.push_back({l, u});
  }
  return out;
}

namespace {

std::size_t fan_in(const LayerSpec& layer) { return shape_size(layer.weight_shape()) / layer.out; }

std::span<float> incoming(std::vector<LayerParams>& params, const ModelSpec& spec, NeuronRef n) {
  const auto width = fan_in(spec.layers[n.layer]);
  return params[n.layer].weight.values().subspan(n.unit * width, width);
}

std::vector<NeuronRef> pick_neurons(const std::vector<NeuronRef>& pool, double ratio, Rng& rng) {
  const auto idx = sample_indices(pool.size(), selection_count(ratio, pool.size()), rng);
  std::vector<NeuronRef> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

// The direct entry points also accept 0, which selects nothing.
void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "ratio must be in [0, 1]");
}

std::size_t last_param_layer(const ModelSpec& spec) {
  std::size_t last = spec.layers.size();
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (spec.layers[l].has_params()) last = l;
  }
  return last;
}

}  // namespace

MutationResult mutate_gf(const TrainedModel& model, double ratio, double sigma, std::uint64_t seed) {
  check_ratio(ratio);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::kInvalidArgument, "sigma must be >= 0");
  auto params = model.params();
  std::vector<std::size_t> offsets;  // first flat weight index of each layer
  std::size_t total = 0;
  for (const auto& p : params) {
    offsets.push_back(total);
    total += p.weight.size();
  }
  if (total == 0) throw Error(ErrorKind::kNoEligibleTarget, "GF: model has no weights");
  Rng rng(derive_seed(seed, "GF"));
  const auto picked = sample_indices(total, selection_count(ratio, total), rng);
  for (auto flat : picked) {
    const auto layer = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin()) - 1;
    float& w = params[layer].weight[flat - offsets[layer]];
    if (sigma > 0.0) {
      std::normal_distribution<double> fuzz(double(w), sigma);
      w = static_cast<float>(fuzz(rng));
    }
  }
  return {TrainedModel(model.spec(), std::move(params)), picked.size()};
}

MutationResult mutate_ws(const TrainedModel& model, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  const auto pool = neurons(model.spec());
  if (pool.empty()) throw Error(ErrorKind::kNoEligibleTarget, "WS: model has no neurons");
  Rng rng(derive_seed(seed, "WS"));
  auto params = model.params();
  const auto picked = pick_neurons(pool, ratio, rng);
  for (auto n : picked) {
    auto row = incoming(params, model.spec(), n);
    std::shuffle(row.begin(), row.end(), rng);
  }
  return {TrainedModel(model.spec(), std::move(params)), picked.size()};
}

MutationResult mutate_neb(const TrainedModel& model, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  const auto& spec = model.spec();
  const auto& shapes = model.shapes();
  const auto last = last_param_layer(spec);
  std::vector<NeuronRef> pool;
  for (auto n : neurons(spec)) {
    if (n.layer != last) pool.push_back(n);
  }
  if (pool.empty()) throw Error(ErrorKind::kNoEligibleTarget, "NEB: no neuron feeds a later parameterized layer");
  Rng rng(derive_seed(seed, "NEB"));
  auto params = model.params();
  const auto picked = pick_neurons(pool, ratio, rng);
  for (auto n : picked) {
    // Follow the neuron's output positions to the next parameterized layer.
    // Flatten keeps row-major positions; pooling keeps the channel.
    auto positions_of = [&](const Shape& s) {
      std::vector<std::size_t> pos;
      if (s.size() == 3) {
        const auto plane = s[1] * s[2];
        for (std::size_t k = 0; k < plane; ++k) pos.push_back(n.unit * plane + k);
      } else {
        pos.push_back(n.unit);
      }
      return pos;
    };
    std::vector<std::size_t> positions = positions_of(shapes[n.layer + 1]);
    for (std::size_t l = n.layer + 1; l < spec.layers.size(); ++l) {
      const auto& layer = spec.layers[l];
      if (layer.kind == LayerKind::kMaxPool2x2) {
        positions = positions_of(shapes[l + 1]);
      } else if (layer.kind == LayerKind::kDense) {
        auto w = params[l].weight.values();
        for (std::size_t o = 0; o < layer.out; ++o) {
          for (auto p : positions) w[o * layer.in + p] = 0.0f;
        }
        break;
      } else if (layer.kind == LayerKind::kConv2D) {
        auto w = params[l].weight.values();
        const auto plane = layer.kernel_h * layer.kernel_w;
        for (std::size_t o = 0; o < layer.out; ++o) {
          std::fill_n(w.begin() + static_cast<std::ptrdiff_t>((o * layer.in + n.unit) * plane), plane, 0.0f);
        }
        break;
      }
    }
  }
  return {TrainedModel(spec, std::move(params)), picked.size()};
}

MutationResult mutate_nai(const TrainedModel& model, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  const auto pool = neurons(model.spec());
  if (pool.empty()) throw Error(ErrorKind::kNoEligibleTarget, "NAI: model has no neurons");
  Rng rng(derive_seed(seed, "NAI"));
  auto params = model.params();
  const auto picked = pick_neurons(pool, ratio, rng);
  for (auto n : picked) {
    for (float& w : incoming(params, model.spec(), n)) w = -w;
    float& b = params[n.layer].bias[n.unit];
    b = -b;
  }
  return {TrainedModel(model.spec(), std::move(params)), picked.size()};
}

MutationResult mutate_ns(const TrainedModel& model, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  const auto& spec = model.spec();
  const auto all = neurons(spec);
  std::vector<NeuronRef> pool;
  std::size_t max_pairs = 0;
  for (auto n : all) {
    if (spec.layers[n.layer].out >= 2) pool.push_back(n);
  }
  for (const auto& layer : spec.layers) {
    if (layer.has_params()) max_pairs += layer.out / 2;
  }
  if (pool.empty()) throw Error(ErrorKind::kNoEligibleTarget, "NS: no layer has two neurons");
  const std::size_t pairs = std::min(max_pairs, selection_count(ratio, all.size()) / 2);

  Rng rng(derive_seed(seed, "NS"));
  std::shuffle(pool.begin(), pool.end(), rng);
  auto params = model.params();
  std::map<std::size_t, std::size_t> waiting;  // layer -> unpaired unit
  std::size_t formed = 0;
  for (auto n : pool) {
    if (formed == pairs) break;
    auto it = waiting.find(n.layer);
    if (it == waiting.end()) {
      waiting.emplace(n.layer, n.unit);
      continue;
    }
    const NeuronRef other{n.layer, it->second};
    waiting.erase(it);
    auto a = incoming(params, spec, n);
    auto b = incoming(params, spec, other);
    std::swap_ranges(a.begin(), a.end(), b.begin());
    std::swap(params[n.layer].bias[n.unit], params[n.layer].bias[other.unit]);
    ++formed;
  }
  return {TrainedModel(spec, std::move(params)), formed * 2};
}

namespace {

LayerEdit edit_for(ModelOpKind kind) {
  switch (kind) {
    case ModelOpKind::kLD: return LayerEdit::kRemove;
    case ModelOpKind::kLA: return LayerEdit::kAdd;
    case ModelOpKind::kAFR: return LayerEdit::kDeactivate;
    default: throw Error(ErrorKind::kInvalidArgument, std::string(to_string(kind)) + " is not a layer operator");
  }
}

MutationResult layer_mutation(const TrainedModel& model, ModelOpKind kind, std::optional<std::size_t> target,
                              std::uint64_t seed) {
  const auto targets = layer_targets(model.spec(), kind);
  if (targets.empty()) throw Error(ErrorKind::kNoEligibleTarget, std::string(to_string(kind)) + ": no eligible layer");
  std::size_t index = 0;
  if (target) {
    if (std::find(targets.begin(), targets.end(), *target) == targets.end()) {
      throw Error(ErrorKind::kNoEligibleTarget, std::string(to_string(kind)) + ": layer " + std::to_string(*target) +
                                                    " is not eligible");
    }
    index = *target;
  } else {
    Rng rng(derive_seed(seed, to_string(kind)));
    std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
    index = targets[pick(rng)];
  }
  return {edit_model(model, edit_for(kind), index), 1};
}

}  // namespace

std::vector<std::size_t> layer_targets(const ModelSpec& spec, ModelOpKind kind) {
  return eligible_layers(spec, edit_for(kind));
}

MutationResult mutate_ld(const TrainedModel& model, std::optional<std::size_t> target, std::uint64_t seed) {
  return layer_mutation(model, ModelOpKind::kLD, target, seed);
}

MutationResult mutate_la(const TrainedModel& model, std::optional<std::size_t> target, std::uint64_t seed) {
  return layer_mutation(model, ModelOpKind::kLA, target, seed);
}

MutationResult mutate_afr(const TrainedModel& model, std::optional<std::size_t> target, std::uint64_t seed) {
  return layer_mutation(model, ModelOpKind::kAFR, target, seed);
}

MutationResult apply(const TrainedModel& model, const ModelOp& op) {
  op.validate();
  switch (op.kind) {
    case ModelOpKind::kGF: return mutate_gf(model, *op.ratio, *op.gf_sigma, op.seed);
    case ModelOpKind::kWS: return mutate_ws(model, *op.ratio, op.seed);
    case ModelOpKind::kNEB: return mutate_neb(model, *op.ratio, op.seed);
    case ModelOpKind::kNAI: return mutate_nai(model, *op.ratio, op.seed);
    case ModelOpKind::kNS: return mutate_ns(model, *op.ratio, op.seed);
    case ModelOpKind::kLD: return mutate_ld(model, op.target_layer, op.seed);
    case ModelOpKind::kLA: return mutate_la(model, op.target_layer, op.seed);
    case ModelOpKind::kAFR: return mutate_afr(model, op.target_layer, op.seed);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown model operator");
}

double default_gf_sigma(const TrainedModel& model) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& p : model.params()) {
    for (float w : p.weight.values()) {
      sum += w;
      sq += double(w) * double(w);
      ++n;
    }
  }
  if (n == 0) return 0.0;
  const double mean = sum / double(n);
  return 0.5 * std::sqrt(std::max(0.0, sq / double(n) - mean * mean));
}

MutantBatch generate_model_mutants(const TrainedModel& model, const ModelMutationConfig& cfg, std::uint64_t seed) {
  MutantBatch batch;
  const double sigma = cfg.gf_sigma.value_or(default_gf_sigma(model));
  auto id_for = [](ModelOpKind kind, std::size_t i) {
    std::string name = to_string(kind);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    char buf[16];
    std::snprintf(buf, sizeof buf, "-%03zu", i);
    return name + buf;
  };

  for (auto kind : {ModelOpKind::kGF, ModelOpKind::kWS, ModelOpKind::kNEB, ModelOpKind::kNAI, ModelOpKind::kNS,
                    ModelOpKind::kLD, ModelOpKind::kLA, ModelOpKind::kAFR}) {
    const std::string name = to_string(kind);
    if (!cfg.operators.empty() && std::find(cfg.operators.begin(), cfg.operators.end(), name) == cfg.operators.end()) {
      continue;
    }
    std::vector<ModelOp> ops;
    if (is_layer_level(kind)) {
      auto targets = layer_targets(model.spec(), kind);
      Rng rng(derive_seed(seed, name));
      std::shuffle(targets.begin(), targets.end(), rng);
      if (targets.size() > cfg.layer_budget) targets.resize(cfg.layer_budget);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        ops.push_back({kind, std::nullopt, std::nullopt, derive_seed(seed, name, i), targets[i]});
      }
      if (targets.empty() && cfg.layer_budget > 0) {
        ++batch.attempted[name];
        Provenance prov{name, MutationLevel::kModel, "layer"};
        prov.parent_checksum = cfg.parent_checksum;
        batch.failures.push_back({id_for(kind, 0), prov, "no eligible layer"});
      }
    } else {
      for (std::size_t i = 0; i < cfg.budget; ++i) {
        ModelOp op{kind, cfg.ratio, std::nullopt, derive_seed(seed, name, i), std::nullopt};
        if (kind == ModelOpKind::kGF) op.gf_sigma = sigma;
        ops.push_back(op);
      }
    }

    for (std::size_t i = 0; i < ops.size(); ++i) {
      const auto& op = ops[i];
      Provenance prov;
      prov.op = name;
      prov.level = MutationLevel::kModel;
      prov.scope = is_layer_level(kind) ? "layer" : (kind == ModelOpKind::kGF ? "weight" : "neuron");
      prov.ratio = op.ratio;
      prov.sigma = op.gf_sigma;
      prov.seed = op.seed;
      prov.target_layer = op.target_layer;
      prov.parent_checksum = cfg.parent_checksum;
      const auto id = id_for(kind, i);
      ++batch.attempted[name];
      try {
        auto result = apply(model, op);
        prov.affected = result.affected;
        if (result.model.bitwise_equal(model)) {
          batch.failures.push_back({id, std::move(prov), "equivalent to the original model"});
          continue;
        }
        ++batch.produced[name];
        batch.mutants.push_back({id, std::move(prov), std::move(result.model)});
      } catch (const Error& e) {
        batch.failures.push_back({id, std::move(prov), e.what()});
      }
    }
  }
  return batch;
}

}  // namespace dlmut
