#pragma once

#include <stdexcept>
#include <string>

namespace bsdelab {

// Violated precondition or assumption record (CLI exit code 2).
class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Runtime numerical failure: overflow, domain error, divergence (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public SpecError {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : SpecError(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

class EvalError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace bsdelab
