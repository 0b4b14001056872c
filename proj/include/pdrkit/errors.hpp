#pragma once

#include <stdexcept>
#include <string>

namespace pdrkit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bad user input: malformed config, unknown family, missing key
struct ConfigError : Error {
    using Error::Error;
};

// grid/field shape violations (too small, mismatched grids, bad index)
struct GridError : Error {
    using Error::Error;
};

// field file format problems, each with its own type so callers can
// distinguish a wrong file from a damaged one
struct IoError : Error {
    using Error::Error;
};
struct BadMagicError : IoError {
    using IoError::IoError;
};
struct TruncatedFileError : IoError {
    using IoError::IoError;
};
struct ComponentMismatchError : IoError {
    using IoError::IoError;
};

// tensor fails the uniform ellipticity requirement of an operation
struct EllipticityError : Error {
    using Error::Error;
};

// linear solver breakdown / Fredholm failure
struct SolverError : Error {
    using Error::Error;
};

// hypothesis mask violated where an operation needs it to hold
struct MaskError : Error {
    using Error::Error;
};

} // namespace pdrkit
