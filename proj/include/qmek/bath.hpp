#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "qmek/grid.hpp"
#include "qmek/spectral.hpp"

namespace qmek::bath {

using complexd = std::complex<double>;

enum class KernelRank { Scalar, Matrix2x2 };

// Complex two-time kernel sampled on a uniform grid.
//
// Scalar rank: value(k, l) = D(t_k, t_l).
// Matrix2x2 rank (indices i, j in {x=0, y=1}): entry(i, j)(k, l) = D_ij(t_k, t_l).
//
// Invariants (checked by hermiticity_defect / stationarity_defect):
//   - Hermiticity in arguments: D_ij(t, s) = conj(D_ji(s, t));
//   - base thermal kernels additionally depend only on t - s (stationary flag).
struct CorrelationKernel {
    TimeGrid grid;
    KernelRank rank{KernelRank::Scalar};
    bool stationary{false};

    // Scalar rank uses comps[0]; matrix rank uses comps[2*i + j].
    std::array<Eigen::MatrixXcd, 4> comps;

    explicit CorrelationKernel(TimeGrid g, KernelRank r = KernelRank::Scalar);

    complexd value(int k, int l) const { return comps[0](k, l); }
    complexd entry(int i, int j, int k, int l) const { return comps[2 * i + j](k, l); }
    Eigen::Matrix2cd matrix_value(int k, int l) const;

    double max_abs() const;
    // max over the grid of |D_ij(t,s) - conj(D_ji(s,t))|
    double hermiticity_defect() const;
    // max over valid shifts of |D(t_k, t_l) - D(t_{k+1}, t_{l+1})|
    double stationarity_defect() const;
    // true if every stored entry is finite
    bool finite() const;
};

// ---- pointwise thermal correlations (adaptive frequency quadrature) ----

// Scalar spin-boson kernel at lag tau:
//   D(tau) = integral dw J(w) [coth(w / 2T) cos(w tau) - i sin(w tau)],
// with coth -> 1 at T = 0 and the removable w -> 0 limit handled analytically.
complexd correlation_value(const SpectralModel& model, double tau,
                           double rel_tol = 1e-10);

// 2x2 quadrature-operator correlation matrix at lag tau (indices x, y):
//   D_xx = D_yy = integral dw J [coth cos(w tau) - i sin(w tau)]
//   D_xy = -D_yx = -integral dw J [coth sin(w tau) + i cos(w tau)]
Eigen::Matrix2cd jc_correlation_value(const SpectralModel& model, double tau,
                                      double rel_tol = 1e-10);

// D(t_k) for k = 0..n_points-1: the stationary kernel line (O(N) storage,
// used where the dense N x N matrix would be wasteful).
std::vector<complexd> correlation_line(const SpectralModel& model,
                                       const TimeGrid& grid,
                                       double rel_tol = 1e-10);

// ---- grid builders ----

CorrelationKernel build_correlation(const SpectralModel& model,
                                    const TimeGrid& grid,
                                    double rel_tol = 1e-10);

CorrelationKernel build_jc_correlation_matrix(const SpectralModel& model,
                                              const TimeGrid& grid,
                                              double rel_tol = 1e-10);

// Stationary scalar kernel from a closed-form lag function D(tau >= 0);
// negative lags filled by Hermiticity D(-tau) = conj(D(tau)).
CorrelationKernel make_stationary_kernel(const TimeGrid& grid,
                                         const std::function<complexd(double)>& D);

// ---- discrete-mode analytic correlations (oracle cross-checks) ----

// Sum of exact single-mode terms for modes (omega_j, g^2_j):
//   D(tau) = sum_j g^2_j [coth(omega_j / 2T) cos(omega_j tau) - i sin(omega_j tau)]
complexd discrete_correlation(const std::vector<std::pair<double, double>>& modes,
                              double temperature, double tau);

Eigen::Matrix2cd discrete_jc_correlation(
    const std::vector<std::pair<double, double>>& modes, double temperature,
    double tau);

} // namespace qmek::bath
