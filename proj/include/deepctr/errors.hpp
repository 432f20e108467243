#pragma once

#include <stdexcept>
#include <string>

namespace deepctr {

// Bad run configuration: unknown model kind, inapplicable sweep axis,
// invalid hyper-parameter, unknown config key. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data: ragged record, unparsable numeric token.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Tensor shape mismatch; message names both shapes.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

class IndexError : public std::out_of_range {
 public:
  explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

// Metric undefined for the given input (e.g. single-class AUC).
class MetricError : public std::runtime_error {
 public:
  explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss or parameter during training. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace deepctr
