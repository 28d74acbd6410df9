#include "qmek/dynamics.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "qmek/quadrature.hpp"

namespace qmek::dynamics {

namespace {

const Qubit2x2 kSigmaX = (Qubit2x2() << 0.0, 1.0, 1.0, 0.0).finished();
const Qubit2x2 kSigmaY =
    (Qubit2x2() << 0.0, complexd(0.0, -1.0), complexd(0.0, 1.0), 0.0).finished();
const Qubit2x2 kSigmaZ = (Qubit2x2() << 1.0, 0.0, 0.0, -1.0).finished();

// J(w) coth(w / 2T) with the removable ohmic w -> 0 limit (matches the
// correlation quadratures in the bath module).
double thermal_weight(const bath::SpectralModel& m, double w) {
    if (m.temperature == 0.0) return bath::eval_spectral_density(m, w);
    if (m.family == bath::SpectralFamily::OhmicGaussianCutoff &&
        w < 1e-6 * m.cutoff_lambda) {
        const double x = w / m.cutoff_lambda;
        return 2.0 * m.prefactor_a * m.temperature * std::exp(-x * x);
    }
    return bath::eval_spectral_density(m, w) / std::tanh(0.5 * w / m.temperature);
}

double upper_frequency(const bath::SpectralModel& m) {
    return m.family == bath::SpectralFamily::Tabulated ? m.samples.back().first
                                                       : 8.0 * m.cutoff_lambda;
}

void check_window(const TimeGrid& grid, const TimeGrid& table) {
    if (grid.t_max > table.t_max * (1.0 + 1e-12))
        throw std::invalid_argument(
            "evolution window extends beyond the coefficient table");
}

} // namespace

Qubit2x2 rho_from_bloch(const BlochVector& v) {
    Qubit2x2 r;
    r(0, 0) = 0.5 * (1.0 + v.z());
    r(0, 1) = 0.5 * complexd(v.x(), -v.y());
    r(1, 0) = 0.5 * complexd(v.x(), v.y());
    r(1, 1) = 0.5 * (1.0 - v.z());
    return r;
}

BlochVector bloch_from_rho(const Qubit2x2& rho, double tol) {
    const double herm = (rho - Qubit2x2(rho.adjoint())).cwiseAbs().maxCoeff();
    const double trace_dev = std::abs(rho.trace() - complexd(1.0, 0.0));
    if (herm > tol || trace_dev > tol)
        throw std::invalid_argument(
            "density matrix must be Hermitian with unit trace");
    return {2.0 * rho(1, 0).real(), 2.0 * rho(1, 0).imag(),
            rho(0, 0).real() - rho(1, 1).real()};
}

BlochVector bloch_rhs(const kernels::CoefficientTable& B, const BlochVector& v,
                      double t) {
    const complexd bzx = B.B_interp(0, t);
    const complexd bzy = B.B_interp(1, t);
    const complexd bzz = B.B_interp(2, t);
    const double rzz = 4.0 * bzz.real();
    const double delta = B.tls.delta;
    const double eps = B.tls.epsilon;
    return {-rzz * v.x() - eps * v.y() + 4.0 * bzx.real() * v.z() -
                4.0 * bzy.imag(),
            eps * v.x() - rzz * v.y() + (4.0 * bzy.real() + delta) * v.z() +
                4.0 * bzx.imag(),
            -delta * v.y()};
}

BlochTrajectory evolve_bloch(const kernels::CoefficientTable& B,
                             const BlochVector& v0, const TimeGrid& grid) {
    if (B.rank != bath::KernelRank::Scalar)
        throw std::invalid_argument("Bloch evolution needs scalar-rank coefficients");
    check_window(grid, B.grid);

    BlochTrajectory traj;
    traj.t.reserve(grid.n_points);
    traj.v.reserve(grid.n_points);
    auto record = [&](double t, const BlochVector& v) {
        traj.t.push_back(t);
        traj.v.push_back(v);
        const double norm = v.norm();
        traj.max_norm = std::max(traj.max_norm, norm);
        if (norm > 1.0 + 1e-9) traj.positivity_ok = false;
    };

    const double h = grid.step();
    const double hs = 0.25 * h;
    BlochVector v = v0;
    record(grid.node(0), v);
    for (int k = 0; k + 1 < grid.n_points; ++k) {
        const double t0 = grid.node(k);
        for (int j = 0; j < 4; ++j) {
            const double ts = t0 + j * hs;
            const BlochVector k1 = bloch_rhs(B, v, ts);
            const BlochVector k2 =
                bloch_rhs(B, v + (0.5 * hs) * k1, ts + 0.5 * hs);
            const BlochVector k3 =
                bloch_rhs(B, v + (0.5 * hs) * k2, ts + 0.5 * hs);
            const BlochVector k4 = bloch_rhs(B, v + hs * k3, ts + hs);
            v += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        record(grid.node(k + 1), v);
    }
    return traj;
}

double dephasing_exponent(const bath::SpectralModel& m, double k0_sq, double t,
                          double rel_tol) {
    m.validate();
    if (t == 0.0 || k0_sq == 0.0) return 0.0;
    if (m.family == bath::SpectralFamily::SingleMode) {
        const double w = m.mode_frequency;
        const double cth =
            m.temperature > 0.0 ? 1.0 / std::tanh(0.5 * w / m.temperature) : 1.0;
        const double s = std::sin(0.5 * w * t);
        return k0_sq * m.mode_weight * cth * 2.0 * s * s / (w * w);
    }
    const double wmax = upper_frequency(m);
    auto integrand = [&](double w) {
        // (1 - cos(w t)) / w^2 written cancellation-free as 2 sin^2(w t / 2) / w^2
        if (w == 0.0) return thermal_weight(m, 0.0) * 0.5 * t * t;
        const double s = std::sin(0.5 * w * t);
        return thermal_weight(m, w) * 2.0 * s * s / (w * w);
    };
    return k0_sq * quadrature::integrate(integrand, 0.0, wmax, rel_tol).value;
}

BlochTrajectory pure_dephasing_exact(const bath::SpectralModel& model,
                                     double k0_sq, double epsilon, double delta,
                                     const BlochVector& v0,
                                     const TimeGrid& grid) {
    if (delta != 0.0)
        throw std::invalid_argument("exact dephasing requires zero tunneling");
    model.validate();

    BlochTrajectory traj;
    traj.t.reserve(grid.n_points);
    traj.v.reserve(grid.n_points);
    const complexd vm0(v0.x(), -v0.y());
    for (int k = 0; k < grid.n_points; ++k) {
        const double t = grid.node(k);
        const double gamma = dephasing_exponent(model, k0_sq, t);
        const complexd vm = vm0 * std::exp(complexd(-gamma, -epsilon * t));
        const BlochVector v(vm.real(), -vm.imag(), v0.z());
        traj.t.push_back(t);
        traj.v.push_back(v);
        const double norm = v.norm();
        traj.max_norm = std::max(traj.max_norm, norm);
        if (norm > 1.0 + 1e-9) traj.positivity_ok = false;
    }
    return traj;
}

DensityTrajectory evolve_jc(const kernels::CoefficientTable& B,
                            const Qubit2x2& rho0, double omega0,
                            const TimeGrid& grid) {
    if (B.rank != bath::KernelRank::Matrix2x2)
        throw std::invalid_argument(
            "rotating-frame evolution needs matrix-rank coefficients");
    check_window(grid, B.grid);

    const Qubit2x2 h0 = (0.5 * omega0) * kSigmaZ;
    const std::array<const Qubit2x2*, 2> pauli = {&kSigmaX, &kSigmaY};
    auto rhs = [&](const Qubit2x2& r, double t) -> Qubit2x2 {
        Qubit2x2 out = complexd(0.0, -1.0) * (h0 * r - r * h0);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const complexd b = B.B_interp(2 * i + j, t);
                const Qubit2x2& si = *pauli[i];
                const Qubit2x2& sj = *pauli[j];
                const Qubit2x2 x = si * sj * r - sj * r * si;
                out -= b * x + std::conj(b) * Qubit2x2(x.adjoint());
            }
        return out;
    };

    DensityTrajectory traj;
    const int n = grid.n_points;
    traj.t.reserve(n);
    traj.rho.reserve(n);
    traj.gamma_minus.resize(n);
    traj.gamma_plus.resize(n);
    const complexd trace0 = rho0.trace();
    const bool same_grid = grid == B.grid;
    double rate_scale = 0.0;
    auto record = [&](int k, const Qubit2x2& r) {
        traj.t.push_back(grid.node(k));
        traj.rho.push_back(r);
        traj.max_trace_dev =
            std::max(traj.max_trace_dev, std::abs(r.trace() - trace0));
        traj.max_herm_dev = std::max(
            traj.max_herm_dev, (r - Qubit2x2(r.adjoint())).cwiseAbs().maxCoeff());
        const complexd bxx = same_grid ? B.B(B.active_order, 0, k)
                                       : B.B_interp(0, grid.node(k));
        const complexd bxy = same_grid ? B.B(B.active_order, 1, k)
                                       : B.B_interp(1, grid.node(k));
        traj.gamma_minus[k] = 4.0 * (bxx.real() - bxy.imag());
        traj.gamma_plus[k] = 4.0 * (bxx.real() + bxy.imag());
        rate_scale = std::max({rate_scale, std::abs(traj.gamma_minus[k]),
                               std::abs(traj.gamma_plus[k])});
    };

    const double h = grid.step();
    const double hs = 0.25 * h;
    Qubit2x2 r = rho0;
    record(0, r);
    for (int k = 0; k + 1 < n; ++k) {
        const double t0 = grid.node(k);
        for (int j = 0; j < 4; ++j) {
            const double ts = t0 + j * hs;
            const Qubit2x2 k1 = rhs(r, ts);
            const Qubit2x2 k2 = rhs(r + (0.5 * hs) * k1, ts + 0.5 * hs);
            const Qubit2x2 k3 = rhs(r + (0.5 * hs) * k2, ts + 0.5 * hs);
            const Qubit2x2 k4 = rhs(r + hs * k3, ts + hs);
            r += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        record(k + 1, r);
    }

    // flag genuine transient negativity, not quadrature-level noise
    for (int k = 0; k < n; ++k)
        if (traj.gamma_minus[k] < -1e-9 * rate_scale ||
            traj.gamma_plus[k] < -1e-6 * rate_scale)
            traj.negative_rate = true;
    return traj;
}

MarkovTrajectory markov_evolve(const std::function<double(double)>& rate,
                               const Qubit2x2& rho0, const TimeGrid& grid) {
    MarkovTrajectory traj;
    traj.t.reserve(grid.n_points);
    traj.rho.reserve(grid.n_points);

    auto rhs = [&](const Qubit2x2& r, double t) -> Qubit2x2 {
        const double rt = rate(t);
        if (rt < 0.0) traj.negative_rate = true;
        // sigma_z r sigma_z - r kills the coherences only
        Qubit2x2 out = Qubit2x2::Zero();
        out(0, 1) = -2.0 * rt * r(0, 1);
        out(1, 0) = -2.0 * rt * r(1, 0);
        return out;
    };

    const double h = grid.step();
    const double hs = 0.25 * h;
    Qubit2x2 r = rho0;
    traj.t.push_back(grid.node(0));
    traj.rho.push_back(r);
    for (int k = 0; k + 1 < grid.n_points; ++k) {
        const double t0 = grid.node(k);
        for (int j = 0; j < 4; ++j) {
            const double ts = t0 + j * hs;
            const Qubit2x2 k1 = rhs(r, ts);
            const Qubit2x2 k2 = rhs(r + (0.5 * hs) * k1, ts + 0.5 * hs);
            const Qubit2x2 k3 = rhs(r + (0.5 * hs) * k2, ts + 0.5 * hs);
            const Qubit2x2 k4 = rhs(r + hs * k3, ts + hs);
            r += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        traj.t.push_back(grid.node(k + 1));
        traj.rho.push_back(r);
    }
    return traj;
}

} // namespace qmek::dynamics
