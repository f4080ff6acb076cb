#pragma once

#include <stdexcept>
#include <string>

namespace stms {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A value violates a precondition (empty sequence, bad range, ...).
struct InvalidInputError : Error {
    using Error::Error;
};

// Matrix or sequence shapes do not line up.
struct DimensionError : Error {
    using Error::Error;
};

// A text input (motion file, config file) could not be parsed.
// Messages name the offending line where one exists.
struct ParseError : Error {
    using Error::Error;
};

// A structurally valid config asks for something inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem-level failure (missing file, unwritable path).
struct IoError : Error {
    using Error::Error;
};

// A binary artifact is damaged (truncated or inconsistent checkpoint).
struct IntegrityError : Error {
    using Error::Error;
};

}  // namespace stms
