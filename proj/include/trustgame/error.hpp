#pragma once

#include <stdexcept>
#include <string>

namespace trustgame {

/// Bad input: parameter out of range, malformed file, unsupported shape.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that started with valid input but could not finish
/// (non-convergence, integrator blow-up, I/O failure).
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace trustgame
