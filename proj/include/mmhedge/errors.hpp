#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmhedge {

// Every failure the library raises falls into one of three families; the CLI
// maps them onto exit codes 2 (config), 3 (data) and 4 (numerical).
enum class ErrorFamily { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, const std::string& what)
        : std::runtime_error(what), family_(family) {}
    ErrorFamily family() const noexcept { return family_; }

private:
    ErrorFamily family_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorFamily::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorFamily::Data, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorFamily::Numerical, what) {}
};

// Argument outside the mathematical domain of an operation (e.g. spot <= 0).
class DomainError : public DataError {
public:
    using DataError::DataError;
};

// Query outside the liquid range; surfaces never extrapolate.
class OutOfRangeError : public DataError {
public:
    using DataError::DataError;
};

// Caller broke a shape or size contract.
class ContractError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

// Linear system singular or too ill-conditioned to trust.
class SingularSystemError : public NumericalError {
public:
    SingularSystemError(const std::string& what, std::vector<std::size_t> suspects = {})
        : NumericalError(what), suspects_(std::move(suspects)) {}
    const std::vector<std::size_t>& suspects() const noexcept { return suspects_; }

private:
    std::vector<std::size_t> suspects_;
};

// Inequality system with an empty feasible region. `certificate` is an
// irreducible infeasible subset of row indices.
class InfeasibleError : public NumericalError {
public:
    InfeasibleError(const std::string& what, std::vector<std::size_t> certificate)
        : NumericalError(what), certificate_(std::move(certificate)) {}
    const std::vector<std::size_t>& certificate() const noexcept { return certificate_; }

private:
    std::vector<std::size_t> certificate_;
};

int exit_code(ErrorFamily family) noexcept;

}  // namespace mmhedge
