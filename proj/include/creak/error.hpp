#pragma once

#include <stdexcept>
#include <string>

namespace creak {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed manifest rows, off-grid ratings, short signals...
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Filesystem and file-format failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Training could not proceed (single class, non-finite features).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace creak
