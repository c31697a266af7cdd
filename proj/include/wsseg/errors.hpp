#pragma once

#include <stdexcept>
#include <string>

namespace wsseg {

// Three families, mapped one-to-one onto CLI exit codes 1, 2 and 3.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class InfeasibleRoi : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ShapeMismatch : public DataError {
public:
    using DataError::DataError;
};

class EmptyMask : public DataError {
public:
    using DataError::DataError;
};

class InvalidValue : public DataError {
public:
    using DataError::DataError;
};

class MissingPair : public DataError {
public:
    using DataError::DataError;
};

class MalformedFile : public DataError {
public:
    using DataError::DataError;
};

class EmptyStack : public DataError {
public:
    using DataError::DataError;
};

class AllSlicesEmpty : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class NonFiniteGradient : public NumericError {
public:
    using NumericError::NumericError;
};

class NonFiniteLoss : public NumericError {
public:
    using NumericError::NumericError;
};

/// The network produced NaN (parameters have diverged).
class NonFiniteOutput : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace wsseg
