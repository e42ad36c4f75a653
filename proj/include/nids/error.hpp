#pragma once

#include <stdexcept>
#include <string>

namespace nids {

// Coarse failure categories; the CLI maps each to its own exit code.
enum class ErrorCategory { config, data, model, internal };

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
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class ModelError : public Error {
public:
  explicit ModelError(const std::string& what) : Error(ErrorCategory::model, what) {}
};

// Raised when a row count would exceed the configured memory budget.
class CapacityError : public ModelError {
public:
  explicit CapacityError(const std::string& what) : ModelError(what) {}
};

int exit_code(ErrorCategory category) noexcept;

}  // namespace nids
