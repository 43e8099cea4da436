// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace arrivalnet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or rank disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// Caller violated an operation precondition.
struct ContractError : Error {
    using Error::Error;
};

/// Invalid configuration value.
struct ConfigError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

/// Malformed file contents (bad magic, CRC mismatch, schema violation).
struct FormatError : Error {
    using Error::Error;
};

}  // namespace arrivalnet
