#pragma once

#include <stdexcept>
#include <string>

namespace times2d {

/// Shape/dimension contract violations (mismatched operands, invalid axes).
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration values or cross-field constraint violations.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input data problems: unreadable files, parse errors, series too short.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A metric whose mathematical preconditions do not hold (zero denominator,
/// horizon shorter than the seasonal period). Reported, never silently zero.
class MetricError : public std::runtime_error {
public:
    explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Corrupt or incompatible checkpoint files.
class CheckpointError : public std::runtime_error {
public:
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite loss during training; message names the failing step.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace times2d
