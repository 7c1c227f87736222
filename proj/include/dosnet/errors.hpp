#pragma once

#include <stdexcept>
#include <string>

namespace dosnet {

// Base of every error thrown by the library. The CLI maps the subclasses
// onto its exit-code contract (see tools/cli_app.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation
// (non-finite entries, negative durations, asymmetric input, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A stability certificate could not be produced, e.g. A + BK is not Hurwitz.
class CertificationError : public Error {
public:
    CertificationError(const std::string& what, double re, double im)
        : Error(what), eig_real_(re), eig_imag_(im) {}

    double eigenvalue_real() const noexcept { return eig_real_; }
    double eigenvalue_imag() const noexcept { return eig_imag_; }

private:
    double eig_real_;
    double eig_imag_;
};

// The requested DoS class or sigma admits no stability guarantee.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double value) : Error(what), value_(value) {}

    // The offending quantity, e.g. 1/T + mu*Delta/tau_D.
    double value() const noexcept { return value_; }

private:
    double value_;
};

// The prediction horizon h*delta is too short for the requested bound.
class HorizonTooShortError : public Error {
public:
    using Error::Error;
};

// Packet delivered at a time earlier than the one already armed.
class OrderingError : public Error {
public:
    using Error::Error;
};

// Computation-delay skip does not fit inside the packet.
class DelayExceedsHorizonError : public Error {
public:
    using Error::Error;
};

}  // namespace dosnet
