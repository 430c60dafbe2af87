#pragma once

#include <stdexcept>
#include <string>

namespace dlmut {

/// Categories of failure surfaced by the toolkit. Callers branch on these
/// (the CLI maps them to exit codes), so new kinds go at the end.
enum class ErrorKind {
  kInvalidArgument,
  kShapeMismatch,
  kIo,
  kBadMagic,
  kDimensionMismatch,
  kTruncated,
  kVersionMismatch,
  kChecksumFailure,
  kMalformedManifest,
  kDivergence,
  kNoEligibleTarget,
  kExhausted,
  kEmptyDataset,
  kNoPassingTests,
  kEmptyMutantSet,
  kConfig,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dlmut
