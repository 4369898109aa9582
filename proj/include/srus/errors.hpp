#pragma once

#include <stdexcept>

namespace srus {

// Invalid parameter values or malformed configuration. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unusable input data: bad file formats, truncated payloads, degenerate stacks.
// CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure inside a solver. CLI exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace srus
