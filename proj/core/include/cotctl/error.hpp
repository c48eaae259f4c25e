#pragma once

#include <stdexcept>
#include <string>

namespace cotctl {

// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
  Config = 3,   // malformed scenario/config documents, invalid topology
  Runtime = 4,  // training divergence, model backend failures
  Io = 5,       // unreadable/unwritable files
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::Config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

class RuntimeFailure : public Error {
 public:
  explicit RuntimeFailure(const std::string& what)
      : Error(ErrorCategory::Runtime, what) {}
};

}  // namespace cotctl
