#pragma once

#include <stdexcept>
#include <string>

namespace factornet {

// Bad inputs: dimension mismatches, schema violations, out-of-range
// parameters. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failures at runtime: diverging training loss, non-finite
// intermediates. The CLI maps these to exit code 1.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace factornet
