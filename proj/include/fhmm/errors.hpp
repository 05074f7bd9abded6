#pragma once

#include <stdexcept>
#include <string>

namespace fhmm {

// Precondition violations use std::invalid_argument directly. The classes
// below carry a category the CLI maps onto distinct exit codes.

class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fhmm
