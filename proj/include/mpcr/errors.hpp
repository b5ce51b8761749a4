#pragma once

#include <stdexcept>
#include <string>

namespace mpcr {

// Raised when input data or configuration violates a documented precondition.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a computation cannot proceed on otherwise valid input
// (degenerate denominators, unattainable targets, ...).
class ComputationError : public std::runtime_error {
public:
    explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mpcr
