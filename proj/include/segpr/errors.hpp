#pragma once

#include <stdexcept>
#include <string>

namespace segpr {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch in a linear-algebra or graph operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Row/element index outside the valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or inconsistent option combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (encoding, tag sequences, record layout).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Failure to open, read, or write a file.
class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid runtime input to an operation (lengths, empty sentence, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Training diverged or produced non-finite values.
class TrainError : public Error {
 public:
  using Error::Error;
};

}  // namespace segpr
