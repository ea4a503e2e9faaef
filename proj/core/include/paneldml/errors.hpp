#pragma once

#include <stdexcept>
#include <string>

namespace paneldml {

/// Invalid or incomplete run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed, out-of-range, or structurally invalid data (CLI exit code 3).
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Estimator failure: rank deficiency, degenerate residuals, etc. (CLI exit code 4).
class EstimationError : public std::runtime_error {
  public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace paneldml
