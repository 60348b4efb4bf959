#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace cfaudit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input, configuration or violated precondition. Maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Ingestion failure; carries the offending data row when one is known.
class DataError : public ValidationError {
 public:
  explicit DataError(const std::string& message,
                     std::optional<std::size_t> row = std::nullopt)
      : ValidationError(row ? message + " (row " + std::to_string(*row) + ")"
                            : message),
        row_(row) {}

  std::optional<std::size_t> row() const { return row_; }

 private:
  std::optional<std::size_t> row_;
};

/// A statistic whose conditioning set is empty.
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfaudit
