#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bevradar {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A planar coordinate fell outside the grid's effective range.
struct OutOfRange : Error {
    using Error::Error;
};

/// Malformed input record. Carries the 1-based line number when known.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line_no = 0)
        : Error(line_no ? what + " (line " + std::to_string(line_no) + ")" : what),
          line(line_no) {}
    std::size_t line = 0;
};

/// A parsed velocity exceeded the physical sanity bound.
struct VelocityOutOfRange : Error {
    VelocityOutOfRange(const std::string& what, std::size_t line_no = 0)
        : Error(line_no ? what + " (line " + std::to_string(line_no) + ")" : what),
          line(line_no) {}
    std::size_t line = 0;
};

/// Sweep poses were not strictly increasing in time.
struct PoseOrderError : Error {
    using Error::Error;
};

/// A detection class string is not one of the known classes.
struct UnknownClass : Error {
    using Error::Error;
};

/// Two grids that must be identical differ.
struct GridMismatch : Error {
    using Error::Error;
};

/// A binary file does not start with the expected magic/version.
struct FormatError : Error {
    using Error::Error;
};

/// A binary file ended before its declared payload.
struct TruncatedFile : Error {
    using Error::Error;
};

/// Synthetic scene placement could not satisfy its constraints.
struct GenerationFailure : Error {
    using Error::Error;
};

/// Invalid configuration value.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace bevradar
