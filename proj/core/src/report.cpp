#include "dlmut/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dlmut/error.hpp"

namespace dlmut {

using nlohmann::json;

std::string kill_matrix_json(const KillMatrix& matrix) {
  json rows = json::array();
  for (const auto& r : matrix.rows) {
    rows.push_back({{"id", r.id}, {"op", r.op}, {"checksum", r.checksum}, {"misses", r.misses},
                    {"errors", r.errors}, {"total", r.total}});
  }
  json excluded = json::array();
  for (const auto& e : matrix.excluded) {
    excluded.push_back(
        {{"id", e.id}, {"op", e.op}, {"checksum", e.checksum}, {"error_rate", e.error_rate}, {"reason", e.reason}});
  }
  json doc{{"num_classes", matrix.num_classes},
           {"test_size", matrix.test_size},
           {"class_support", matrix.class_support},
           {"rows", rows},
           {"excluded", excluded}};
  return doc.dump(1) + "\n";
}

KillMatrix parse_kill_matrix(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    KillMatrix m;
    m.num_classes = doc.at("num_classes").get<std::size_t>();
    m.test_size = doc.value("test_size", std::size_t{0});
    m.class_support = doc.at("class_support").get<std::vector<std::size_t>>();
    for (const auto& r : doc.at("rows")) {
      m.rows.push_back({r.at("id").get<std::string>(), r.at("op").get<std::string>(),
                        r.at("checksum").get<std::string>(), r.at("misses").get<std::vector<std::size_t>>(),
                        r.at("errors").get<std::size_t>(), r.at("total").get<std::size_t>()});
    }
    for (const auto& e : doc.at("excluded")) {
      m.excluded.push_back({e.at("id").get<std::string>(), e.at("op").get<std::string>(),
                            e.at("checksum").get<std::string>(), e.at("error_rate").get<double>(),
                            e.value("reason", std::string())});
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedManifest, std::string("kill matrix: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::kMalformedManifest, std::string("kill matrix: ") + e.what());
  }
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string report_json(const MutationReport& report) {
  json per_class = json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back(
        {{"class", c.label}, {"support", c.support}, {"score", optional_number(c.score)}, {"aer", optional_number(c.aer)}});
  }
  json per_op = json::object();
  for (const auto& [op, m] : report.per_operator) {
    per_op[op] = {{"evaluated", m.evaluated},
                  {"excluded", m.excluded},
                  {"score", optional_number(m.score)},
                  {"aer", optional_number(m.aer)}};
  }
  json doc{{"mutation_score", report.mutation_score},
           {"aer", report.aer},
           {"num_classes", report.num_classes},
           {"test_size", report.test_size},
           {"passed_size", report.passed_size},
           {"counts", {{"generated", report.generated}, {"excluded", report.excluded}, {"evaluated", report.evaluated}}},
           {"per_class", per_class},
           {"per_operator", per_op}};
  return doc.dump(2) + "\n";
}

std::string report_table(const MutationReport& report) {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("N/A");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
    return std::string(buf);
  };
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-9s", "");
  out << buf;
  for (const auto& c : report.per_class) {
    std::snprintf(buf, sizeof buf, "%8d", c.label);
    out << buf;
  }
  out << "\n" << "mu. sc.  ";
  for (const auto& c : report.per_class) {
    std::snprintf(buf, sizeof buf, "%8s", cell(c.score).c_str());
    out << buf;
  }
  out << "\n" << "avg.err. ";
  for (const auto& c : report.per_class) {
    std::snprintf(buf, sizeof buf, "%8s", cell(c.aer).c_str());
    out << buf;
  }
  out << "\n\n";
  std::snprintf(buf, sizeof buf, "mutation score %.2f%%, AER %.2f%%\n", 100.0 * report.mutation_score,
                100.0 * report.aer);
  out << buf;
  out << "mutants: " << report.generated << " generated, " << report.excluded << " excluded by QC, "
      << report.evaluated << " evaluated\n";
  out << "T': " << report.passed_size << " of " << report.test_size << " test samples\n";
  if (!report.per_operator.empty()) {
    out << "\n" << "operator  evaluated excluded  mu. sc. avg.err.\n";
    for (const auto& [op, m] : report.per_operator) {
      std::snprintf(buf, sizeof buf, "%-9s %9zu %8zu %8s %8s\n", op.c_str(), m.evaluated, m.excluded,
                    cell(m.score).c_str(), cell(m.aer).c_str());
      out << buf;
    }
  }
  return out.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

void write_report_files(const std::filesystem::path& dir, const KillMatrix& matrix, const MutationReport& report) {
  write_text(dir / "killmatrix.json", kill_matrix_json(matrix));
  write_text(dir / "report.json", report_json(report));
  write_text(dir / "report.txt", report_table(report));
}

}  // namespace dlmut
