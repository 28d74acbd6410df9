#pragma once

#include <functional>

namespace qmek::quadrature {

struct Result {
    double value{0.0};
    double abs_error{0.0}; // estimated absolute error
};

// Adaptive Gauss-Kronrod integration of f over [a, b].
// Throws qmek::NumericalError with diagnostics if the requested tolerance
// cannot be met.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 0.0);

} // namespace qmek::quadrature
