#pragma once

#include <stdexcept>
#include <string>

namespace ganaug {

/// Input data or arguments violate a documented precondition or invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss. Carries the diagnostic dump location.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::string dump_dir)
        : std::runtime_error(what), dump_dir_(std::move(dump_dir)) {}
    const std::string& dump_dir() const { return dump_dir_; }

private:
    std::string dump_dir_;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ganaug
