#pragma once

#include <stdexcept>
#include <string>

namespace vexad {

/// Input that violates a documented contract (bad record, wrong label, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or vector shapes that do not line up.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown (non-finite values escaping a clamp).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vexad
