#pragma once

#include <stdexcept>
#include <string>

namespace mor {

// Precondition / input violations. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Failures of the numerics themselves (non-convergence, singular systems,
// monotonicity audits). The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mor
