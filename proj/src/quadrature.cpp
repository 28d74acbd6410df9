#include "qmek/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>

#include "qmek/errors.hpp"

namespace qmek::quadrature {

namespace {

double trampoline(double x, void* params) {
    const auto* f = static_cast<const std::function<double(double)>*>(params);
    return (*f)(x);
}

// GSL's default error handler aborts the process; switch to status codes.
void silence_gsl() {
    static std::once_flag flag;
    std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const {
        gsl_integration_workspace_free(w);
    }
};

} // namespace

Result integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double abs_tol) {
    if (a == b) return {0.0, 0.0};
    silence_gsl();

    constexpr size_t kMaxIntervals = 4000;
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
        gsl_integration_workspace_alloc(kMaxIntervals));
    if (!ws) throw NumericalError("quadrature", "workspace allocation failed");

    gsl_function gf;
    gf.function = &trampoline;
    gf.params = const_cast<std::function<double(double)>*>(&f);

    Result r;
    int status =
        gsl_integration_qag(&gf, a, b, abs_tol, rel_tol, kMaxIntervals,
                            GSL_INTEG_GAUSS61, ws.get(), &r.value, &r.abs_error);
    if (status != 0) {
        std::ostringstream msg;
        msg << "adaptive integration on [" << a << ", " << b
            << "] failed: " << gsl_strerror(status)
            << " (estimate " << r.value << ", error " << r.abs_error
            << ", rel_tol " << rel_tol << ", abs_tol " << abs_tol << ")";
        throw NumericalError("quadrature", msg.str());
    }
    if (!std::isfinite(r.value))
        throw NumericalError("quadrature", "integral evaluated to a non-finite value");
    return r;
}

} // namespace qmek::quadrature
