#pragma once

#include <stdexcept>
#include <string>

namespace sleepsim {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration or input-file problem (bad value, unparseable text).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Trace/log file could not be parsed; carries the 1-based line number.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ConfigError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A value outside its documented domain (e.g. utilization not in [0,1]).
class RangeError : public ConfigError {
public:
    explicit RangeError(const std::string& what) : ConfigError(what) {}
};

/// A (CPU state, platform state) pair outside the compatibility table.
class IncompatiblePair : public Error {
public:
    explicit IncompatiblePair(const std::string& what) : Error(what) {}
};

/// A wake-up latency outside the supported hardware range (strict mode only).
class LatencyOutOfRange : public ConfigError {
public:
    explicit LatencyOutOfRange(const std::string& what) : ConfigError(what) {}
};

/// Queue has no stationary regime: arrival rate >= effective service rate.
class Unstable : public Error {
public:
    explicit Unstable(const std::string& what) : Error(what) {}
};

/// Requested a rescale to a utilization >= 1.
class UnstableTarget : public Error {
public:
    explicit UnstableTarget(const std::string& what) : Error(what) {}
};

/// Closed forms only cover exponential service; anything else is refused.
class UnsupportedDistribution : public Error {
public:
    explicit UnsupportedDistribution(const std::string& what) : Error(what) {}
};

class EmptyStream : public Error {
public:
    explicit EmptyStream(const std::string& what) : Error(what) {}
};

class EmptyGrid : public Error {
public:
    explicit EmptyGrid(const std::string& what) : Error(what) {}
};

class EmptyOutcomes : public Error {
public:
    explicit EmptyOutcomes(const std::string& what) : Error(what) {}
};

/// Predictor updated for a minute it never issued a prediction for.
class OutOfOrderUpdate : public Error {
public:
    explicit OutOfOrderUpdate(const std::string& what) : Error(what) {}
};

class TraceTooShort : public Error {
public:
    explicit TraceTooShort(const std::string& what) : Error(what) {}
};

} // namespace sleepsim
