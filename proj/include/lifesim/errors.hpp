#pragma once

#include <stdexcept>
#include <string>

namespace lifesim {

// Exit-code categories used by the CLI: 1 validation, 2 runtime, 3 backend exhaustion.
enum class ErrorKind { validation, runtime, backend_exhaustion };

class Error : public std::runtime_error {
public:
    explicit Error(std::string message, ErrorKind kind = ErrorKind::runtime)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::string message)
        : Error(std::move(message), ErrorKind::validation) {}
};

/// Structured-output parsing failed; carries the raw backend reply for diagnosis.
class ParseError : public Error {
public:
    ParseError(std::string message, std::string raw_reply)
        : Error(std::move(message), ErrorKind::runtime), raw_reply_(std::move(raw_reply)) {}

    const std::string& raw_reply() const { return raw_reply_; }

private:
    std::string raw_reply_;
};

class BackendError : public Error {
public:
    explicit BackendError(std::string message,
                          ErrorKind kind = ErrorKind::backend_exhaustion)
        : Error(std::move(message), kind) {}
};

}  // namespace lifesim
