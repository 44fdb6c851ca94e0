#ifndef TCDIAG_ERRORS_H
#define TCDIAG_ERRORS_H

#include <stdexcept>
#include <string>

namespace tcdiag {

/// An enumeration or dense computation would exceed its size guard.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parameter combination the requested method does not cover.
struct UnsupportedModeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string &msg, int line = -1)
        : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg), line(line) {
    }
    int line;
};

}  // namespace tcdiag

#endif
