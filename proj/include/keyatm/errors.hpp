#pragma once

#include <stdexcept>
#include <string>

namespace keyatm {

// Malformed input files or configuration. Maps to CLI exit status 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input parsed but violates a data invariant (ragged covariates,
// non-contiguous time index, empty documents, ...). Also exit status 2.
struct SchemaError : ConfigError {
    using ConfigError::ConfigError;
};

// A numerical failure inside a Markov chain. Maps to CLI exit status 3.
struct SamplerFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace keyatm
