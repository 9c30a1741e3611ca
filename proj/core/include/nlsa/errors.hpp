#pragma once

#include <stdexcept>
#include <string>

namespace nlsa {

// Bad user input: out-of-range parameters, malformed configs.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller misuse: mismatched grids or sectors, unsupported coefficients.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A solver failed to converge or produced non-finite output.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A mathematical property the lab asserts was violated.
class PropertyFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nlsa
