#pragma once

#include <stdexcept>
#include <string>

namespace hydrovalue {

/// Bad input data or parameters (CLI exit code 1).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical solver failure (CLI exit code 2).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hydrovalue
