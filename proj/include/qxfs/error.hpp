#pragma once

#include <stdexcept>
#include <string>

namespace qxfs {

// Bad configuration: unknown keys, invalid parameter values, unknown method.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A search stage could not proceed (for example a degenerate snapshot).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qxfs
