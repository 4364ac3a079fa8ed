#pragma once

#include <stdexcept>
#include <string>

namespace kgfuse {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct CorpusError : Error {
    using Error::Error;
};

struct TemplateError : Error {
    using Error::Error;
};

struct TransportError : Error {
    TransportError(const std::string& what, int status = 0) : Error(what), last_status(status) {}
    int last_status;  // last HTTP status, 0 if the transport never connected
};

struct FixtureMissError : Error {
    FixtureMissError(const std::string& what, std::string digest_)
        : Error(what), digest(std::move(digest_)) {}
    std::string digest;
};

struct GraphError : Error {
    using Error::Error;
};

struct LpParseError : Error {
    using Error::Error;
};

struct MetricError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace kgfuse
