#pragma once

#include <stdexcept>
#include <string>

namespace eigensens {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (parse failures, too few rows, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Caller asked for something out of range: an index, a retained count, a flag value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A computation needs a unique eigenvalue (or a nonzero gap) and did not get one.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Closed-form influence requested for an estimator that has none.
class UnsupportedEstimator : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace eigensens
