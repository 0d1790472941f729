#pragma once

#include <stdexcept>
#include <string>

namespace sparsecox {

/// Malformed or invalid input data (files, configs). Maps to CLI exit code 1.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a trustworthy result
/// (overflowing linear predictors, singular information, infeasible LP).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sparsecox
