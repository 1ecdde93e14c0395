#pragma once

#include <stdexcept>
#include <string>

namespace editbench {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stream-level ingest failure (unreadable input). Single bad records never raise this.
class IngestError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    RenderError(std::string field)
        : Error("missing placeholder value: " + field), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ProviderError : public Error {
public:
    ProviderError(const std::string& what, bool retryable = true)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

/// Configuration problem; `path()` names the offending config field.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace editbench
