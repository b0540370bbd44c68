#pragma once

#include <stdexcept>
#include <string>

namespace slope {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map the whole family onto exit codes in one place.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidMatrix : public Error { using Error::Error; };
class InvalidVector : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class InvalidCovariance : public Error { using Error::Error; };
class EmptyPattern : public Error { using Error::Error; };
class InvalidPattern : public Error { using Error::Error; };
class InvalidClusterValues : public Error { using Error::Error; };
class InvalidTuning : public Error { using Error::Error; };
class InvalidDesign : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };

class CalibrationFailed : public Error {
public:
    CalibrationFailed(const std::string& what, double ceiling)
        : Error(what), ceiling_(ceiling) {}
    /// Largest probability reachable by the upper bound on this configuration.
    double ceiling() const noexcept { return ceiling_; }

private:
    double ceiling_;
};

}  // namespace slope
