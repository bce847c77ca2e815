#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace collide {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (nonpositive volume, negative moment order, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A model parameter selects a regime the solver does not support,
/// e.g. a power-law breakup exponent that produces infinitely many fragments.
class UnsupportedRegime : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's precondition (grid mismatch, oversize oracle grid).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Invalid configuration. Carries every problem found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    explicit ConfigError(const std::string& problem)
        : ConfigError(std::vector<std::string>{problem}) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

} // namespace collide
