#pragma once

#include <stdexcept>
#include <string>

namespace hqgnn {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, invalid arguments, inconsistent shapes.
class InputError : public Error {
public:
    using Error::Error;
};

/// Malformed text input, carries the 1-based line number.
class ParseError : public InputError {
public:
    ParseError(std::size_t line, const std::string& what)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Binary artifact with a wrong magic, version or truncated payload.
class FormatError : public InputError {
public:
    using InputError::InputError;
};

/// Non-finite loss or parameters during training.
class DivergenceError : public Error {
public:
    DivergenceError(long step, const std::string& what)
        : Error("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

    long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace hqgnn
