#pragma once

#include <stdexcept>
#include <string>

namespace trapablate {

/// Argument outside the mathematical domain of an operation (z <= 0, negative
/// fluence, alpha <= 0, ...). Maps to CLI exit code 1.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Value outside a tabulated range; no extrapolation is attempted.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Malformed or inconsistent scenario/configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical solve did not reach its acceptance tolerance.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A measurement trace carries no usable signal.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stored event log disagrees with its own re-execution.
class CorruptionError : public std::runtime_error {
public:
    CorruptionError(const std::string& what, long long seq) : std::runtime_error(what), seq_(seq) {}
    long long seq() const { return seq_; }

private:
    long long seq_;
};

} // namespace trapablate
