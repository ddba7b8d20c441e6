#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zoo {

/// Root of every error raised by the runtime. Each subclass maps onto one
/// CLI exit code (see ErrorClass).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ErrorClass { Validation = 2, Io = 3, Integrity = 4 };

// --- numeric / graph errors --------------------------------------------------

class DimensionError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class GraphError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ExecutionError : public Error {
public:
    using Error::Error;
};

// --- artifact errors ---------------------------------------------------------

/// Malformed weight container. `offset` is the byte position where decoding
/// stopped.
class ContainerError : public Error {
public:
    ContainerError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// JSON document does not match the expected schema. `path` is a JSON-pointer
/// style location such as `inputs[0].shape`.
class ParseError : public Error {
public:
    ParseError(const std::string& path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class MissingServiceError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public IoError {
public:
    using IoError::IoError;
};

class PublishError : public IoError {
public:
    PublishError(const std::string& what, int status)
        : IoError(what + " (HTTP " + std::to_string(status) + ")"), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class StartupError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace zoo
