#pragma once

#include <stdexcept>
#include <string>

namespace nmp {

// Bad arguments or unsupported requests; the CLI maps these to exit code 2.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Requested model exceeds the configured node cap.
class SizeError : public UsageError {
public:
    explicit SizeError(const std::string& what) : UsageError(what) {}
};

// The model cannot support the request (e.g. disconnected graph).
class ModelError : public UsageError {
public:
    explicit ModelError(const std::string& what) : UsageError(what) {}
};

// Operation not defined for this model kind (e.g. gradient on a graph).
class UnsupportedOperationError : public UsageError {
public:
    explicit UnsupportedOperationError(const std::string& what) : UsageError(what) {}
};

// Numerical breakdown (non-convergence, NaN, unreachable tolerance);
// the CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nmp
