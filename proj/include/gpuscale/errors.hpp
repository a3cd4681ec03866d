// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpuscale {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input text does not match the expected wire format. Carries the
/// 1-based line number when the failure is tied to a specific line.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

/// Well-formed input that violates a domain invariant or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A JSON document is missing required fields or has the wrong schema version.
class SchemaError : public Error {
public:
    using Error::Error;
};

} // namespace gpuscale
