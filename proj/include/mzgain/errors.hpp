#pragma once

#include <stdexcept>
#include <string>

namespace mzgain {

// Base of every error raised by the library. Callers that only need to know
// "this grid point failed" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ZeroStateError : public Error {
public:
    ZeroStateError() : Error("state has no nonzero amplitude") {}
    using Error::Error;
};

class DivergentSqueezingError : public Error {
public:
    explicit DivergentSqueezingError(double y)
        : Error("squeezing series parameter y = " + std::to_string(y) +
                " outside [0, 0.5); squeezing amplitude diverges") {}
};

class NegligibleBranchError : public Error {
public:
    using Error::Error;
};

class NoInformationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class UndefinedSlopeError : public Error {
public:
    using Error::Error;
};

class NoCrossingError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error("config field '" + field + "': " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class EmptyTableError : public Error {
public:
    EmptyTableError() : Error("refusing to emit an empty table") {}
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace mzgain
