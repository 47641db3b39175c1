#pragma once

#include <stdexcept>
#include <string>

namespace pairtask {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (registry, run config, mapping).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing files, malformed rows, unregistered labels.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss, broken checkpoint chain, backend failures during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace pairtask
