#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hybridsense {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a model (negative PSD, frequency out of band, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Harmonic sum did not settle before hitting the configured ceiling.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Parameter sweep whose grid does not bracket an interior minimum.
class BracketError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside the time-domain simulator.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, std::size_t cycle)
        : Error(what + " (cycle " + std::to_string(cycle) + ")"), cycle_(cycle) {}

    std::size_t cycle() const noexcept { return cycle_; }

private:
    std::size_t cycle_;
};

} // namespace hybridsense
