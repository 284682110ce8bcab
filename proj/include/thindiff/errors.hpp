#pragma once

#include <stdexcept>
#include <string>

namespace thindiff {

// Invalid or inconsistent configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable/unwritable files or malformed file content; exit code 3.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during optimization; carries the step index; exit code 4.
struct NumericalAbort : std::runtime_error {
    int step;
    NumericalAbort(const std::string& msg, int step_index)
        : std::runtime_error(msg), step(step_index) {}
};

}  // namespace thindiff
