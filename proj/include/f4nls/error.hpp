#pragma once

#include <stdexcept>
#include <string>

namespace f4nls {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad grid, bad exponent, wrong space, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Configuration file or command line rejected before any computation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a report file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace f4nls
