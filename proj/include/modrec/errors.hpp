#pragma once

#include <stdexcept>
#include <string>

namespace modrec {

/// Invalid configuration (bad hyperparameter, malformed config file, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or out-of-range data (bad label, corrupt dataset file, ...).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor shape mismatch; message names the offending shapes.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// API misuse (backward on a non-scalar, double backward, ...).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric runaway during optimization (non-finite loss).
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace modrec
