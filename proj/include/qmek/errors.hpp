#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qmek {

// Raised when an adaptive numerical procedure (quadrature, linear solve,
// integrator) fails to meet its declared tolerance or hits a singular
// operator. Carries the originating module name for CLI diagnostics.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

// Raised by config parsing/validation. Carries the dotted path of the
// offending field, e.g. "grid.n_points".
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string field_path, const std::string& what)
        : std::runtime_error(field_path + ": " + what),
          field_path_(std::move(field_path)) {}

    const std::string& field_path() const noexcept { return field_path_; }

private:
    std::string field_path_;
};

} // namespace qmek
