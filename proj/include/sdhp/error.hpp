#pragma once

#include <stdexcept>
#include <string>

namespace sdhp {

/// Bad configuration or argument (CLI exit code 1).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A post arrived with a time earlier than one already processed.
class StreamOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files, unwritable outputs, corrupt checkpoints.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdhp
