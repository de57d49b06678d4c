#pragma once

#include <stdexcept>
#include <string>

namespace fmgpan {

// Process exit codes shared by the CLI and the error hierarchy.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kFormat = 3,
  kDegenerate = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::kFailure)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Shapes, band counts or ratios that do not line up.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension error: " + what, ExitCode::kUsage) {}
};

/// Invalid parameters (gains out of range, unsupported ratio, bad config keys).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("configuration error: " + what, ExitCode::kUsage) {}
};

/// Malformed or incompatible files.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format error: " + what, ExitCode::kFormat) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("i/o error: " + what, ExitCode::kFormat) {}
};

/// Numerically degenerate input (all-zero reference band, zero variance, ...).
class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& what) : Error("numeric degeneracy: " + what, ExitCode::kDegenerate) {}
};

/// A caller broke an API contract (e.g. a stale activation cache).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error("contract violation: " + what, ExitCode::kFailure) {}
};

}  // namespace fmgpan
