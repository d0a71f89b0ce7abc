#pragma once

#include <stdexcept>
#include <string>

namespace alignaudit {

// Root of the library's exception hierarchy. The CLI maps subclasses onto
// process exit codes (see report/commands.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inputs whose shapes disagree (label sets, matrix dimensions, ...).
class StructuralError : public Error {
public:
    using Error::Error;
};

// Inputs that are well formed but leave a statistic undefined.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    BackendError(const std::string& what, bool retryable)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

class AuthenticationError : public BackendError {
public:
    explicit AuthenticationError(const std::string& what) : BackendError(what, false) {}
};

class MalformedPayloadError : public BackendError {
public:
    MalformedPayloadError(const std::string& what, std::string payload)
        : BackendError(what, false), payload_(std::move(payload)) {}
    const std::string& payload() const noexcept { return payload_; }

private:
    std::string payload_;
};

// Backend cannot supply the requested signal (e.g. no log-probabilities).
class UnsupportedCapabilityError : public BackendError {
public:
    explicit UnsupportedCapabilityError(const std::string& what) : BackendError(what, false) {}
};

// None of the requested option tokens appear in the returned top-k.
class CoverageError : public BackendError {
public:
    CoverageError(const std::string& what, std::string diagnostics)
        : BackendError(what, false), diagnostics_(std::move(diagnostics)) {}
    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

// Training loss increased for too many consecutive epochs.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// A model's output could not be parsed after the allowed reprompts.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace alignaudit
