#pragma once

#include <stdexcept>
#include <string>

namespace distillkit {

// Error taxonomy. The CLI maps these onto process exit codes
// (config -> 2, runtime -> 3, io/integrity -> 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (invalid hyperparameters, counts, dims).
struct ConfigError : Error {
    using Error::Error;
};

// A caller violated an API contract (shape mismatch, inconsistent groupings).
struct ContractError : Error {
    using Error::Error;
};

// Dataset ingestion failure; message names the offending path.
struct IngestionError : Error {
    using Error::Error;
};

// Unknown class id or similar failed lookup.
struct LookupError : Error {
    using Error::Error;
};

// Training diverged or produced a non-finite quantity.
struct TrainingError : Error {
    using Error::Error;
};

// A numeric quantity became non-finite; message names the component.
struct NumericError : Error {
    using Error::Error;
};

// A statistic was requested from too few samples (e.g. covariance of one).
struct DegenerateStatisticsError : Error {
    using Error::Error;
};

// Checkpoint or manifest corruption.
struct IntegrityError : Error {
    using Error::Error;
};

// Filesystem failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace distillkit
