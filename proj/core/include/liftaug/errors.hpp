#pragma once

#include <stdexcept>
#include <string>

namespace liftaug {

/// Tensor/layer dimension mismatch.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// API misuse: backward on a non-scalar, double backward without reset,
/// train-mode batch norm on a single sample, and the like.
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Geometric domain violations: degenerate bones, nonpositive length
/// ratios, joints at or behind the projection plane.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dataset / file problems. `record` is the offending record index when
/// known, -1 otherwise.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg, long record_index = -1)
        : std::runtime_error(record_index >= 0
                                 ? msg + " (record " + std::to_string(record_index) + ")"
                                 : msg),
          record(record_index) {}
    long record;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite losses or gradients during optimization.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace liftaug
