#pragma once

#include <stdexcept>
#include <string>

namespace bess {

/// Bad or inconsistent input data (files, series, configuration values).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A CSV row that cannot be parsed. Carries the 1-based line number.
class ParseError : public DataError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Timestamps that do not form a uniform grid (beyond single-step gaps).
class StructuralError : public DataError {
public:
    using DataError::DataError;
};

/// Two series that cannot be put on a common time range.
class AlignmentError : public DataError {
public:
    using DataError::DataError;
};

/// Invalid parameter block (battery, tariff, kernel, search, config file).
class ConfigError : public DataError {
public:
    using DataError::DataError;
};

/// A state-of-charge or power bound broken beyond tolerance. Indicates a bug
/// upstream; never silently clamped.
class BoundViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An optimisation model reported infeasible or failed to solve.
class OptimizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace bess
