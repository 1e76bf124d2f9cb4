#pragma once

#include <stdexcept>
#include <string>

namespace cosgraph {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto stable exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid graph construction or query (bad endpoint, bad node index).
class GraphError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// One-hot encoding received a label outside the alphabet.
class EncodingError : public Error {
public:
    using Error::Error;
};

/// Dataset files are missing or malformed.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Fold construction impossible (a class smaller than k).
class StratificationError : public Error {
public:
    using Error::Error;
};

/// Clique enumeration exceeded its work budget.
class FeatureTimeout : public Error {
public:
    using Error::Error;
};

/// Misuse of the gradient tape (double backward, detached seed, ...).
class TapeError : public Error {
public:
    using Error::Error;
};

class OptimizerError : public Error {
public:
    using Error::Error;
};

class LossError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cosgraph
