#pragma once

#include <stdexcept>
#include <string>

namespace hgunet {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Bad data content, e.g. an unknown label string.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Internal bookkeeping went wrong (corrupt pooling indices and the like).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace hgunet
