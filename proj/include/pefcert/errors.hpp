#pragma once
#include <stdexcept>
#include <string>

namespace pefcert {

// Invalid input: violated preconditions, malformed files, out-of-range parameters.
struct ValidationError : std::invalid_argument {
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Problem instance exceeds the supported enumeration budget.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative solver failed to meet its convergence criteria.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pefcert
