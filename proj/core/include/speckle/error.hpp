#pragma once

#include <stdexcept>
#include <string>

namespace speckle {

// Invalid sizes, ranges, or mismatched inputs. CLI exit code 2.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Filesystem failures. CLI exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A self-check (forward-model audit, determinism, regime threshold) failed.
// CLI exit code 4.
class VerificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace speckle
