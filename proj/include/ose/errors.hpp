#pragma once

#include <stdexcept>
#include <string>

namespace ose {

/// Bad or inconsistent configuration (files, flags, search-space axes).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: measurement records, token files, metric values.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cross-module invariant failed; always a bug somewhere.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ose
