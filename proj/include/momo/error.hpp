// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace momo {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SymmetryError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimateUndefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace momo
