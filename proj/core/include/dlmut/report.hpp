#pragma once

#include <filesystem>
#include <string>

#include "dlmut/analysis.hpp"

namespace dlmut {

// killmatrix.json schema:
//   { "num_classes": K, "test_size": N, "class_support": [K ints],
//     "rows": [{"id", "op", "checksum", "misses": [K ints], "errors", "total"}],
//     "excluded": [{"id", "op", "checksum", "error_rate", "reason"}] }
std::string kill_matrix_json(const KillMatrix& matrix);
/// kMalformedManifest on schema violations.
KillMatrix parse_kill_matrix(const std::string& text);

// report.json: scalar metrics, counts, "per_class" (score/aer are null for
// classes without support) and "per_operator".
std::string report_json(const MutationReport& report);

/// Two-row table, one column per class, values in percent:
///          c0     c1   ...
///   mu. sc. 8.00   9.50
///   avg.err. 1.20  0.40
std::string report_table(const MutationReport& report);

/// Writes killmatrix.json, report.json and report.txt into `dir`.
void write_report_files(const std::filesystem::path& dir, const KillMatrix& matrix, const MutationReport& report);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dlmut
