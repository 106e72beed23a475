#pragma once

#include <stdexcept>
#include <string>

namespace tcwunet {

// Base class for every exception the engine throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or mismatched tensor shapes.
struct ConfigError : Error {
    using Error::Error;
};

// A documented call contract was violated (geometry, lengths).
struct ContractError : Error {
    using Error::Error;
};

// Numerically or semantically bad data (NaN samples, silent SNR input).
struct DataError : Error {
    using Error::Error;
};

// Operation not valid in the current stream state (e.g. push after flush).
struct StateError : Error {
    using Error::Error;
};

// File system / container problems.
struct IoError : Error {
    using Error::Error;
};

// Weight container is unreadable or inconsistent.
struct WeightsError : IoError {
    using IoError::IoError;
};

// WAV-specific decode failures, each distinct so callers can tell them apart.
struct WavFormatError : IoError {
    using IoError::IoError;
};
struct WavUnsupportedError : IoError {
    using IoError::IoError;
};
struct WavTruncatedError : IoError {
    using IoError::IoError;
};

} // namespace tcwunet
