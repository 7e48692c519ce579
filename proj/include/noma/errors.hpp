#pragma once

#include <stdexcept>
#include <string>

namespace noma {

// Invalid user-supplied configuration (bad alpha vector, unknown key, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to reach its stated accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive hypothesis enumeration would exceed the configured cap.
class EnumerationCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace noma
