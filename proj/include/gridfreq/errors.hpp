#pragma once

#include <stdexcept>
#include <string>

namespace gridfreq {

/// Scenario file could not be parsed or failed validation. The message
/// carries the offending line number when one is known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
    ConfigError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    int line() const { return line_; }

private:
    int line_ = -1;
};

/// Numerical integration or a simulation step produced an unusable state.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gridfreq
