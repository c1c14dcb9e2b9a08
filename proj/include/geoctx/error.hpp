#pragma once

#include <stdexcept>
#include <string>

namespace geoctx {

/// Base class for all library errors. `code()` is a short machine-readable
/// tag that the CLI prints alongside the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string &what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string &code() const noexcept { return code_; }

private:
    std::string code_;
};

class OutOfBoundsError : public Error {
public:
    explicit OutOfBoundsError(const std::string &what) : Error("out_of_bounds", what) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string &what) : Error("invalid_argument", what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string &what) : Error("shape_mismatch", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string &what) : Error("config", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string &what) : Error("io", what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string &what) : Error("format", what) {}
};

/// Raised when a divergence is undefined because Q has no mass where P does.
class SupportError : public Error {
public:
    explicit SupportError(const std::string &what) : Error("support", what) {}
};

/// Warnings go through a single sink so tests and the CLI can capture them.
using WarningSink = void (*)(const std::string &);
void set_warning_sink(WarningSink sink);
void warn(const std::string &message);

}  // namespace geoctx
