#include "dlmut/error.hpp"

namespace dlmut {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kBadMagic: return "bad-magic";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kVersionMismatch: return "version-mismatch";
    case ErrorKind::kChecksumFailure: return "checksum-failure";
    case ErrorKind::kMalformedManifest: return "malformed-manifest";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kNoEligibleTarget: return "no-eligible-target";
    case ErrorKind::kExhausted: return "exhausted";
    case ErrorKind::kEmptyDataset: return "empty-dataset";
    case ErrorKind::kNoPassingTests: return "no-passing-tests";
    case ErrorKind::kEmptyMutantSet: return "empty-mutant-set";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace dlmut
