#pragma once

#include <stdexcept>
#include <string>

namespace gft {

/// Bad or inconsistent input (files, configs, arguments). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No feasible route under the current graph. CLI exit code 3.
class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Target evaluation cannot be performed (no labeled test split). CLI exit code 4.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside an algorithm (non-finite loss, NaN cost, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gft
