#pragma once

#include <stdexcept>
#include <string>

namespace madj {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text (graph files, SCM files, CSV data).
struct ParseError : Error {
    using Error::Error;
};

// Structurally invalid graphs, queries, or arguments.
struct ValidationError : Error {
    using Error::Error;
};

// An estimator hit an empty stratum that the formula requires to be populated.
struct PositivityError : Error {
    using Error::Error;
};

// Input exceeds a guard meant to keep exhaustive computations tractable.
struct TooLargeError : Error {
    using Error::Error;
};

// A postcondition the implementation guarantees failed to hold; always a bug.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace madj
