#pragma once

#include <stdexcept>
#include <string>

namespace stablab {

/// Broad failure families. The CLI maps each onto a distinct exit code.
enum class ErrorCategory {
  Domain,       // invalid numeric argument
  Config,       // bad or unknown configuration
  Data,         // malformed, corrupt or inconsistent data files
  Training,     // divergence during optimization
};

/// Finer reason for data errors, so callers and tests can tell them apart.
enum class DataErrorKind {
  None,
  Io,
  BadMagic,
  VersionMismatch,
  Truncated,
  Invariant,
  Alignment,
  UnknownClass,
  DimensionMismatch,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what,
        DataErrorKind kind = DataErrorKind::None)
      : std::runtime_error(what), category_(category), kind_(kind) {}

  ErrorCategory category() const noexcept { return category_; }
  DataErrorKind data_kind() const noexcept { return kind_; }

 private:
  ErrorCategory category_;
  DataErrorKind kind_;
};

[[noreturn]] inline void throw_domain(const std::string& what) {
  throw Error(ErrorCategory::Domain, what);
}

[[noreturn]] inline void throw_data(DataErrorKind kind, const std::string& what) {
  throw Error(ErrorCategory::Data, what, kind);
}

[[noreturn]] inline void throw_config(const std::string& what) {
  throw Error(ErrorCategory::Config, what);
}

/// Raised when a loss becomes non-finite; `epoch` is zero-based.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : Error(ErrorCategory::Training, what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace stablab
