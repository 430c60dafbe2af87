#include "dlmut/mutant.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dlmut/error.hpp"
#include "dlmut/serialize.hpp"
#include "json.hpp"

namespace dlmut {

using nlohmann::json;

const char* to_string(MutationLevel level) noexcept {
  return level == MutationLevel::kSource ? "source" : "model";
}

std::string provenance_json(const Provenance& p, const std::string& id, const std::string& model_checksum) {
  json j = {{"id", id},
            {"operator", p.op},
            {"level", to_string(p.level)},
            {"scope", p.scope},
            {"seed", p.seed},
            {"affected", p.affected},
            {"parent_checksum", p.parent_checksum},
            {"model_checksum", model_checksum}};
  j["local_class"] = p.local_class ? json(*p.local_class) : json(nullptr);
  j["ratio"] = p.ratio ? json(*p.ratio) : json(nullptr);
  j["sigma"] = p.sigma ? json(*p.sigma) : json(nullptr);
  j["target_layer"] = p.target_layer ? json(*p.target_layer) : json(nullptr);
  return j.dump(2) + "\n";
}

Provenance parse_provenance(const std::string& text) {
  try {
    const auto j = json::parse(text);
    Provenance p;
    p.op = j.at("operator").get<std::string>();
    const auto level = j.at("level").get<std::string>();
    if (level != "source" && level != "model") throw Error(ErrorKind::kMalformedManifest, "unknown level " + level);
    p.level = level == "source" ? MutationLevel::kSource : MutationLevel::kModel;
    p.scope = j.at("scope").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.affected = j.at("affected").get<std::size_t>();
    p.parent_checksum = j.at("parent_checksum").get<std::string>();
    if (!j.at("local_class").is_null()) p.local_class = j.at("local_class").get<int>();
    if (!j.at("ratio").is_null()) p.ratio = j.at("ratio").get<double>();
    if (!j.at("sigma").is_null()) p.sigma = j.at("sigma").get<double>();
    if (!j.at("target_layer").is_null()) p.target_layer = j.at("target_layer").get<std::size_t>();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedManifest, std::string("provenance sidecar: ") + e.what());
  }
}

void write_mutant(const std::filesystem::path& dir, const MutantRecord& mutant) {
  std::filesystem::create_directories(dir);
  const auto text = serialize_model(mutant.model);
  const auto model_path = dir / (mutant.id + std::string(kModelExtension));
  {
    std::ofstream out(model_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + model_path.string());
    out << text;
  }
  const auto meta_path = dir / (mutant.id + ".json");
  std::ofstream meta(meta_path, std::ios::trunc);
  if (!meta) throw Error(ErrorKind::kIo, "cannot write " + meta_path.string());
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", crc32(text));
  meta << provenance_json(mutant.provenance, mutant.id, hex);
}

void write_mutants(const std::filesystem::path& dir, const std::vector<MutantRecord>& mutants) {
  for (const auto& m : mutants) write_mutant(dir, m);
}

std::vector<MutantRecord> load_mutants(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::kIo, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> models;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == kModelExtension) models.push_back(entry.path());
  }
  std::sort(models.begin(), models.end());
  std::vector<MutantRecord> out;
  for (const auto& path : models) {
    auto meta_path = path;
    meta_path.replace_extension(".json");
    std::ifstream meta(meta_path);
    if (!meta) throw Error(ErrorKind::kIo, "missing provenance sidecar " + meta_path.string());
    std::stringstream buf;
    buf << meta.rdbuf();
    out.push_back(MutantRecord{path.stem().string(), parse_provenance(buf.str()), load_model(path)});
  }
  return out;
}

}  // namespace dlmut
