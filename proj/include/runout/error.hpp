#pragma once

#include <stdexcept>
#include <string>

namespace runout {

// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class TruncationError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class SplitError : public Error {
public:
    using Error::Error;
};

class EnsembleError : public Error {
public:
    using Error::Error;
};

// Raised when the flow state acquires a NaN or Inf. Carries the step context.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(const std::string& what, double t, double dt, double max_h, double max_speed)
        : Error(what), t_(t), dt_(dt), max_h_(max_h), max_speed_(max_speed) {}

    double time() const noexcept { return t_; }
    double dt() const noexcept { return dt_; }
    double max_h() const noexcept { return max_h_; }
    double max_speed() const noexcept { return max_speed_; }

private:
    double t_;
    double dt_;
    double max_h_;
    double max_speed_;
};

}  // namespace runout
