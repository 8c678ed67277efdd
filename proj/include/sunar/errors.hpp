#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sunar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input at a known line of a file (1-based).
class FormatError : public Error {
public:
    FormatError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    explicit FormatError(const std::string& what) : Error(what) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised by model clients (transport, HTTP status, fixture miss, contract violations).
class ClientError : public Error {
public:
    using Error::Error;
};

class FixtureMissError : public ClientError {
public:
    explicit FixtureMissError(const std::string& fingerprint)
        : ClientError("scripted fixture miss: no entry for fingerprint " + fingerprint),
          fingerprint_(fingerprint) {}

    [[nodiscard]] const std::string& fingerprint() const noexcept { return fingerprint_; }

private:
    std::string fingerprint_;
};

}  // namespace sunar
