#pragma once

#include <stdexcept>
#include <string>

namespace cloakcatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class CountMismatch : public Error {
public:
    using Error::Error;
};

class TooManyObservations : public Error {
public:
    using Error::Error;
};

class EmptyModel : public Error {
public:
    using Error::Error;
};

class InvalidUrl : public Error {
public:
    explicit InvalidUrl(const std::string& url)
        : Error("invalid absolute URL: '" + url + "'")
    {
    }
};

class StoreUnavailable : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cloakcatch
