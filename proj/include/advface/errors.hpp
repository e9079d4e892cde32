#pragma once

#include <stdexcept>
#include <string>

namespace advface {

/// Invalid configuration: bad ranges, unknown keys, incompatible shapes in a config.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input tensors or files that do not satisfy an operation's preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss, score or gradient became NaN/Inf. The message names the offending term.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateTransformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset directory could not be ingested; message lists the offending files.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace advface
