#pragma once

#include <stdexcept>
#include <string>

namespace deepresearch {

enum class ErrorCode {
    invalid_argument,  // caller violated a precondition or a type invariant
    config,            // missing or inconsistent configuration
    transport,         // network-level failure, retryable
    protocol,          // backend replied with something unusable
    format,            // generated text violates a required format
    capacity,          // a bounded resource is exhausted
    io,                // filesystem problem
    runtime,           // anything else
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Transport failures carry how many attempts were made before giving up.
class TransportError : public Error {
public:
    TransportError(const std::string& message, int attempts)
        : Error(ErrorCode::transport, message), attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

} // namespace deepresearch
