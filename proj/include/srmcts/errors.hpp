#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srmcts {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage. CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Problems with input data, expressions or feature references. CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failures inside the search machinery. CLI exit code 3.
class SearchError : public Error {
 public:
  using Error::Error;
};

class IncompleteExpression : public DataError {
 public:
  using DataError::DataError;
};

class UnknownFeature : public DataError {
 public:
  using DataError::DataError;
};

class SyntaxError : public DataError {
 public:
  SyntaxError(const std::string& what, std::size_t position)
      : DataError(what + " at position " + std::to_string(position)),
        position_(position) {}
  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class MissingColumn : public DataError {
 public:
  explicit MissingColumn(const std::string& column)
      : DataError("missing column: " + column), column_(column) {}
  [[nodiscard]] const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class BadRole : public DataError {
 public:
  using DataError::DataError;
};

class UnparseableValue : public DataError {
 public:
  UnparseableValue(const std::string& what, std::size_t row)
      : DataError(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  [[nodiscard]] std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class NotCategorical : public DataError {
 public:
  using DataError::DataError;
};

class EmptyFeatureSet : public DataError {
 public:
  EmptyFeatureSet() : DataError("feature configuration is empty") {}
};

class NoPositives : public DataError {
 public:
  NoPositives() : DataError("recall undefined: labels contain no positives") {}
};

class DegenerateLabels : public DataError {
 public:
  DegenerateLabels() : DataError("auc undefined: labels need both classes") {}
};

class TooFewExpressions : public DataError {
 public:
  TooFewExpressions() : DataError("need at least two expressions to equate") {}
};

class TerminalState : public SearchError {
 public:
  TerminalState() : SearchError("operation requires a non-terminal state") {}
};

class IllegalAction : public SearchError {
 public:
  using SearchError::SearchError;
};

class EmptyMask : public SearchError {
 public:
  EmptyMask() : SearchError("action mask has no legal actions") {}
};

class NonFiniteLoss : public SearchError {
 public:
  NonFiniteLoss() : SearchError("policy loss is not finite") {}
};

class UnknownVariant : public ConfigError {
 public:
  explicit UnknownVariant(const std::string& name)
      : ConfigError("unknown puct variant: " + name) {}
};

class SpaceTooLarge : public SearchError {
 public:
  explicit SpaceTooLarge(double count)
      : SearchError("expression space too large to enumerate: " +
                    std::to_string(count) + " candidates"),
        count_(count) {}
  [[nodiscard]] double count() const noexcept { return count_; }

 private:
  double count_;
};

}  // namespace srmcts
