#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace imcmc {

/// Invalid configuration, kernel/model mismatch, unreadable input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. Carries the 1-based line number of the offending row.
class ParseError : public ConfigError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A numerical routine failed to converge or produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double achieved_error = 0.0)
      : std::runtime_error(what), achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

/// Series with zero sample variance handed to an autocorrelation estimator.
class DegenerateSeriesError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Too few samples for the requested estimator resolution.
class InsufficientDataError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace imcmc
