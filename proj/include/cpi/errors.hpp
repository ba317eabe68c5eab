#pragma once

#include <stdexcept>
#include <string>

namespace cpi {

// Error classes map onto the CLI exit codes: config 2, precondition 3, io 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw PreconditionError(msg);
}

}  // namespace cpi
