#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ipd {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// N >= n*m for some player.
class BudgetConstraintError : public ConfigError {
  using ConfigError::ConfigError;
};

/// A model reply without a usable structured payload.
class MalformedReply : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TemplateError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Event log I/O failures and misuse (e.g. appending to a closed log).
class LogError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class LogParseError : public LogError {
 public:
  LogParseError(const std::string& path, std::size_t line, const std::string& what)
      : LogError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaMismatch : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ipd
