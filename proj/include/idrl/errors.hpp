#pragma once

#include <stdexcept>
#include <string>

namespace idrl {

// Dimension or architecture mismatch between connected pieces.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input file is structurally wrong (missing column, bad header).
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A cell failed to parse; message carries row/column.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Metric requested without the ground truth it needs.
struct UnsupportedMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace idrl
