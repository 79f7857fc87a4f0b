#pragma once

#include <stdexcept>
#include <string>

namespace mmmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (hyperparameters, experiment files, CLI flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The requested formulation cannot be applied to the dataset (for example no predictor variables).
class FormulationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Problems with input data: schema mismatch, unparseable cells, gaps, insufficient rows.
class DataError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation's precondition (shape mismatch, out-of-range argument).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace mmmf
