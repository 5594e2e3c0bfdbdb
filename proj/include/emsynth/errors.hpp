#pragma once

#include <stdexcept>
#include <string>

namespace emsynth {

// Base of all toolkit errors. The CLI maps anything derived from this
// to exit code 1; command-line usage problems exit with 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Source text could not be parsed; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// A mnemonic is not present in the instruction catalog.
class CatalogError : public Error {
public:
    using Error::Error;
};

// An emission config value is invalid or incomplete.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A block library does not cover one or more requested instruction pairs.
class CoverageError : public Error {
public:
    using Error::Error;
};

// Vector length mismatch between signals that must be compared.
class DimensionError : public Error {
public:
    using Error::Error;
};

// An argument is outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

// A cross-validation plan cannot be built from the available data.
class PlanError : public Error {
public:
    using Error::Error;
};

// Archive or file format problem.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace emsynth
