#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace recourse {

// Dimension mismatch or non-finite numeric input.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration or query (bad hyperparameters, guard limits, etc).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or missing input data. Row and column are set when known
// (row is 1-based over data lines, column is the header name).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& message, std::size_t row = 0,
                     std::string column = {})
      : std::runtime_error(message), row_(row), column_(std::move(column)) {}

  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// Content hash does not verify.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lookup of something that does not exist (model, version, feature).
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace recourse
