// errors.hpp - exception types shared across the toolkit
#pragma once

#include <stdexcept>
#include <string>

namespace uat {

// Bad input: shape mismatches, malformed files, contract violations.
// CLI maps this to exit code 1.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: divergence, non-finite values mid-computation.
// CLI maps this to exit code 2.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uat
