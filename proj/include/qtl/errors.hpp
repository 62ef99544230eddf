#pragma once

#include <stdexcept>
#include <string>

namespace qtl {

/// Shape or index disagreement between tensors / circuit wires.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid user-supplied configuration (ranges, unknown keys, bad flags).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation called in the wrong lifecycle state (e.g. backward twice).
struct StateError : std::runtime_error {
  explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Problem size exceeds what a backend can represent.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dataset file problems: missing image, malformed PGM, bad manifest row.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Metric preconditions violated (empty input, single-class AUC).
struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Corrupt or incompatible checkpoint file.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value encountered where the contract requires finite data.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qtl
