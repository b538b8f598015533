#pragma once

#include <stdexcept>
#include <string>

namespace pgru {

// Each error category maps onto one process exit code in the CLI.

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by cosine similarity when a vector has (near) zero norm.
class DegenerateVectorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace pgru
