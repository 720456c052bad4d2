#pragma once

#include <stdexcept>
#include <string>

namespace mdiplus {

// Invalid configuration: unknown options, out-of-range parameters,
// incompatible model/metric/task combinations. The CLI maps this to exit 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unusable input data: CSV parse failures, non-numeric cells,
// non-binary labels for classification, NaN/Inf entries. CLI exit 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model screening removed every candidate. CLI exit 4.
class EmptyScreenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdiplus
