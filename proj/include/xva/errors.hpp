#pragma once

#include <stdexcept>
#include <string>

namespace xva {

/// Bad user input: parameters, contracts, grids or configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite integrands, out-of-surface queries and similar failures
/// raised while a computation is in progress.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace xva
