#pragma once

#include <stdexcept>
#include <string>

namespace kt {

/// Base class for all errors raised by the toolkit.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or contract-violating input data (CSV rows, schemas, vocab
/// mismatches). Messages carry the offending row number when known.
struct DataError : Error {
  using Error::Error;
};

/// Invalid model/training configuration or unsupported flag combination.
struct ConfigError : Error {
  using Error::Error;
};

/// Tensor shape or index violations inside the model stack.
struct ShapeError : Error {
  using Error::Error;
};

/// Numerical failure during training (NaN/Inf loss).
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace kt
