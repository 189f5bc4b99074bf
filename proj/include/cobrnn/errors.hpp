#pragma once

#include <stdexcept>
#include <string>

namespace cobrnn {

// Bad arguments, violated preconditions, malformed configuration. CLI exit 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (scenes, model JSON, config). CLI exit 2.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required. CLI exit 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cobrnn
