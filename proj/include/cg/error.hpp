#pragma once

#include <stdexcept>
#include <string>

namespace cg {

/// Invalid input or configuration (bad dimensions, unknown names, malformed
/// files). The CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that could not produce a trustworthy number: non-integrable
/// weights, eigensolver stagnation, divergent trajectories. Exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cg
