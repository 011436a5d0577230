#pragma once

#include <stdexcept>
#include <string>

namespace sbdc {

// Scenario/schema problems. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mid-run consistency violation; names the violated invariant. Exit code 3.
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sbdc
