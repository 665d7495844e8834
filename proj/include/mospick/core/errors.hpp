#pragma once

#include <stdexcept>
#include <string>

namespace mospick {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses let the CLI map failures
// to exit codes and let the controller distinguish abort reasons.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class DegenerateHistogramError : public Error {
public:
    using Error::Error;
};

class DetectionError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class AcquisitionError : public CalibrationError {
public:
    using CalibrationError::CalibrationError;
};

class MotionError : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class NoGraspError : public Error {
public:
    using Error::Error;
};

class NoDissectionPointError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mospick
