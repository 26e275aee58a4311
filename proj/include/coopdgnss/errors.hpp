#pragma once

#include <stdexcept>
#include <string>

namespace coopdgnss {

/// Invalid or inconsistent configuration input (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rank-deficient or badly conditioned matrix (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or vector shapes that do not fit together.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace coopdgnss
