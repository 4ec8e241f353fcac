#pragma once

#include <stdexcept>
#include <string>

namespace mvb2b {

// Base for every error raised by the toolkit. The CLI maps these to exit 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape mismatch, out-of-range parameter, non-finite value.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

// Timestamp spacing does not match the expected step length.
class ResolutionError : public Error {
public:
    using Error::Error;
};

// Scenario generation failure (empty pool class, degenerate peaks).
class GenerationError : public Error {
public:
    using Error::Error;
};

// Network topology or sensitivity problems in the hosting module.
class ModelError : public Error {
public:
    using Error::Error;
};

// Statistics over an empty or all-undefined sample.
class AggregationError : public Error {
public:
    using Error::Error;
};

// Study configuration problems, reported with a JSON-pointer style path.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mvb2b
