#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace strata {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (corpus, topics, runs, qrels, snapshots).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what,
                     std::optional<std::size_t> line = std::nullopt)
      : Error(line ? "line " + std::to_string(*line) + ": " + what : what),
        line_(line) {}

  std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

/// A syntactically broken record.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// A well-formed record that violates a domain invariant (e.g. no title).
class RejectedRecord : public DataError {
 public:
  using DataError::DataError;
};

/// Unknown identifier (unit, article, topic).
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Bad caller input: CLI flags or service request parameters.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An external or built-in scorer failed. `batch_index` is the position of
/// the failing request within the batch that was being scored.
class ScorerError : public Error {
 public:
  ScorerError(const std::string& detail, std::size_t batch_index)
      : Error("scorer failure at batch index " + std::to_string(batch_index) +
              ": " + detail),
        detail_(detail),
        batch_index_(batch_index) {}

  std::size_t batch_index() const { return batch_index_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  std::size_t batch_index_;
};

}  // namespace strata
