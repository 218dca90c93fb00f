#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dgscreen {

/// Base of every error thrown by the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class CannotAugment : public Error {
 public:
  using Error::Error;
};

class AugmentationStalled : public Error {
 public:
  using Error::Error;
};

class IncompleteSession : public Error {
 public:
  using Error::Error;
};

class UndefinedEntropy : public Error {
 public:
  using Error::Error;
};

class InvalidSplit : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class PredictionError : public Error {
 public:
  using Error::Error;
};

class DeserializationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class BookkeepingError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class Conflict : public Error {
 public:
  using Error::Error;
};

class NotReady : public Error {
 public:
  using Error::Error;
};

/// A document failed schema validation. Carries every violation found.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "schema violation";
    for (const auto& s : v) {
      out += "; ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace dgscreen
