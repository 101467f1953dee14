#pragma once

#include <stdexcept>
#include <string>

namespace sievekit {

// Base of every failure raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function or table.
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid solver or grid configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericOverflowError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

// A bound cannot be evaluated at the requested point (e.g. v below the sifting limit).
class EvaluationError : public Error {
public:
    using Error::Error;
};

class AdmissibilityError : public Error {
public:
    using Error::Error;
};

// Request exceeds the desk-scale limits of the scanner.
class ResourceError : public Error {
public:
    using Error::Error;
};

class CacheError : public Error {
public:
    using Error::Error;
};

// Shooting did not converge; carries the last residuals F(u_max)-1 and f(u_max)-1.
class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, double residual_upper, double residual_lower)
        : Error(what), residual_upper_(residual_upper), residual_lower_(residual_lower) {}

    double residual_upper() const noexcept { return residual_upper_; }
    double residual_lower() const noexcept { return residual_lower_; }

private:
    double residual_upper_;
    double residual_lower_;
};

}  // namespace sievekit
