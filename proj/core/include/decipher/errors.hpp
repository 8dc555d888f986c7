#pragma once

#include <stdexcept>
#include <string>

namespace decipher {

// Dimension or width disagreement between tensors / layer parameters.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A corpus record does not match the expected schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The input data cannot support the requested computation
// (single-class classifier corpus, infeasible split, diverged training).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint container is malformed, truncated, or from an unsupported version.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace decipher
