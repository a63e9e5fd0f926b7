#pragma once

#include <stdexcept>
#include <string>

namespace sprvm {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
  kImpropriety = 5,
};

/// Base of all library errors; carries the exit code the CLI maps it to.
class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ExitCode::kUsage, what) {}
};

/// Unreadable, malformed or inconsistent input data (including I/O failures).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

/// Failures of a numerical routine (factorization, overflow, bad moments).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::kNumeric, what) {}
};

/// The requested prior provably yields an improper posterior.
class ImproprietyError : public Error {
 public:
  explicit ImproprietyError(const std::string& what)
      : Error(ExitCode::kImpropriety, what) {}
};

}  // namespace sprvm
