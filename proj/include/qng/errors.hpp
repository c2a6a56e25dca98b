#pragma once

#include <stdexcept>

namespace qng {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Correlation functions are undefined at zero mean photon number.
struct ZeroIntensity : Error {
    using Error::Error;
};

// Fock-space cutoff too small for the requested tail budget.
struct TruncationError : Error {
    using Error::Error;
};

// Malformed input data (bad magic, bad field, truncated record).
struct FormatError : Error {
    using Error::Error;
};

// Time tags decrease beyond the reorder tolerance.
struct OrderError : Error {
    using Error::Error;
};

// Detector channel outside the supported set {0,1,2}.
struct ChannelError : Error {
    using Error::Error;
};

// Normalization peak has zero counts, estimate impossible.
struct NoNormalization : Error {
    using Error::Error;
};

// Invalid configuration value.
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace qng
