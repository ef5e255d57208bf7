#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lampsde {

// Exception hierarchy. The CLI maps each family to a distinct exit code.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParams : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DomainError : public std::domain_error {
public:
    DomainError(const std::string& what, std::size_t index = 0)
        : std::domain_error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class InadmissibleStep : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), lo_(lo), hi_(hi) {}
    double bracket_lo() const noexcept { return lo_; }
    double bracket_hi() const noexcept { return hi_; }

private:
    double lo_, hi_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lampsde
