#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coopsgd {

// Bad dimensions passed to a kernel (empty matrix, mismatched product, ...).
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid user-facing configuration (empty selection, c*m rounding to zero, ...).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field_path, const std::string& what)
        : std::invalid_argument(field_path + ": " + what), field_path_(std::move(field_path)) {}

    const std::string& field_path() const noexcept { return field_path_; }

private:
    std::string field_path_;
};

// Numerical failure (power iteration cap reached, non-finite input, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Training blow-up; carries the iteration at which it was detected.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace coopsgd
