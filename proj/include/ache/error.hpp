#pragma once

#include <stdexcept>
#include <string>

namespace ache {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller supplied an argument outside an operation's documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A computation produced or met values it cannot handle (non-finite data,
/// blow-up, too little decay to fit).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ache
