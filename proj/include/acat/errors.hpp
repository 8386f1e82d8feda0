#pragma once

#include <stdexcept>
#include <string>

namespace acat {

// Bad dimensions, bad parameters, bad config files.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation called out of order (e.g. backward without a recorded forward).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed serialized data (weight files, images).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed input whose content violates a contract (labels out of range,
// mismatched CSV schemas, empty sequences).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AttackError : std::runtime_error {
    explicit AttackError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PlacementError : std::runtime_error {
    explicit PlacementError(const std::string& msg) : std::runtime_error(msg) {}
};

// Trace update asked to average over an empty region.
struct DegenerateMaskError : std::runtime_error {
    explicit DegenerateMaskError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace acat
