#pragma once

#include <stdexcept>
#include <string>

namespace insitu {

/// Base for every error the library raises. `exit_code()` maps onto the CLI
/// convention: 1 usage, 2 data, 3 numeric.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 2; }
};

/// Bad arguments or configuration.
class UsageError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

/// Tensor shapes that do not fit an operation.
class ShapeError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Missing files, malformed inputs, degenerate data.
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// NaN/Inf produced inside a computation.
class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

} // namespace insitu
