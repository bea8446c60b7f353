#pragma once

#include <stdexcept>
#include <string>

namespace lifebelt {

/// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, written or parsed (CLI exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A guaranteed invariant was violated at run time (CLI exit code 4).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lifebelt
