#pragma once

#include <stdexcept>
#include <string>

namespace gridcast {

// Invalid or inconsistent input data (CSV contents, series lengths, shapes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid pipeline or model configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or activation during training / inference.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The simplex solver hit its iteration limit, or a dispatch LP came back
// in a state that the formulation rules out.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridcast
