#pragma once

#include <stdexcept>
#include <string>

namespace carkit {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad design matrix: unseen factor level, constant column, shape mismatch.
class DesignError : public Error {
public:
  using Error::Error;
};

// Structural failure inside a model fit (rank deficiency, no events, ...).
// Plain non-convergence is reported through FitResult::converged instead.
class EstimationError : public Error {
public:
  using Error::Error;
};

// Resampling aborted (too many non-convergent refits).
class ResampleError : public Error {
public:
  using Error::Error;
};

class CsvError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace carkit
