#pragma once

#include <stdexcept>
#include <string>

namespace qtopo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical computation left its admissible regime.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File or stream failure; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qtopo
