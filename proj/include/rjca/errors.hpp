#pragma once

#include <stdexcept>
#include <string>

namespace rjca {

// Shape contract violated (inner extents, column counts, weight shapes).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered, or a normalization of a zero vector.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid model/training configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or unusable input data (score sets, trial lists, id lookups).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rjca
