#pragma once

#include <stdexcept>
#include <string>

namespace offerlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A ratio or difference the operation divides by is zero.
class DegenerateError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataIntegrityError : public Error {
public:
    using Error::Error;
};

class UnknownCustomer : public Error {
public:
    explicit UnknownCustomer(long id)
        : Error("unknown customer " + std::to_string(id)), customer_id(id) {}
    long customer_id;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside the sampler; carries the iteration it happened at.
class SamplerError : public Error {
public:
    SamplerError(const std::string& what, long draw)
        : Error(what + " (draw " + std::to_string(draw) + ")"), draw_index(draw) {}
    long draw_index;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_number(line) {}
    std::size_t line_number;
};

/// A pipeline stage was run before the artifact it consumes exists.
class DependencyError : public Error {
public:
    using Error::Error;
};

}  // namespace offerlab
