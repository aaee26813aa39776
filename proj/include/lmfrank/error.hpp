#pragma once

#include <stdexcept>
#include <string>

namespace lmfrank {

// Malformed or inconsistent input files and arguments.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid command-line or configuration settings.
class UsageError : public InputError {
public:
    using InputError::InputError;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A held-out positive is still present among the training positives.
class LeakageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lmfrank
