#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace esvae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInputError : public Error {
public:
    using Error::Error;
};

class DegenerateConfigurationError : public Error {
public:
    using Error::Error;
};

class AntipodalPointsError : public Error {
public:
    using Error::Error;
};

class InjectivityRadiusError : public Error {
public:
    using Error::Error;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

class TrainingDivergenceError : public Error {
public:
    explicit TrainingDivergenceError(const std::string& what, long batch_index = -1)
        : Error(what), batch_index(batch_index) {}
    long batch_index;
};

class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

class UnstableCiError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace esvae
