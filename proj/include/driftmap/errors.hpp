#pragma once

#include <stdexcept>
#include <string>

namespace driftmap {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data is malformed: bad file layout, non-finite values, inconsistent
// dimensions. The CLI maps this family to exit code 1.
class FormatError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public FormatError {
public:
    using FormatError::FormatError;
};

class DimensionMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

class IoError : public FormatError {
public:
    using FormatError::FormatError;
};

// Snapshot integrity failures.
class DigestMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

class UnsupportedVersionError : public FormatError {
public:
    using FormatError::FormatError;
};

// A snapshot stored in reference mode needs the dataset it points to.
class MissingDependencyError : public FormatError {
public:
    using FormatError::FormatError;
};

// A caller violated a precondition (k > n, p outside [0,100], ...).
// The CLI maps this family to exit code 2.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

}  // namespace driftmap
