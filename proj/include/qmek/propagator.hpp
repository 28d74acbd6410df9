#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "qmek/grid.hpp"

namespace qmek::propagator {

// Two-level system parameters for H0 = -(1/2) delta sigma_x + (1/2) epsilon sigma_z
// (hbar = 1). The free Heisenberg frequency is omega = sqrt(delta^2 + epsilon^2).
struct TlsParams {
    double delta{1.0};   // tunneling frequency
    double epsilon{1.0}; // bias energy
    // v2 hook: time-dependent delta(t), epsilon(t); constant in v1.

    double omega() const { return std::hypot(delta, epsilon); }
};

// Heaviside step with the symmetric convention theta(0) = 1/2.
inline double theta(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? 0.0 : 0.5); }

// Closed-form free propagator of the Pauli vector, sigma_i(u) = b_i^j(u) sigma_j:
// a rotation by angle omega*u about the unit axis (-delta, 0, epsilon)/omega.
// b(0) = identity; rows are orthonormal for every u; omega -> 0 gives identity.
Eigen::Matrix3d tls_propagator(const TlsParams& p, double u);

// z-row autocorrelation entry b_z^z(u) = 1 + (delta^2/omega^2)(cos(omega u) - 1);
// even in u. This is the only propagator entry the scalar contraction needs.
double tls_bzz(const TlsParams& p, double u);

// c-number Wick contraction of sigma_z(s1) sigma_z(s2) evolved relative to a
// reference time t_ref:
//   -2 [ sum_i b_z^i(s1 - t_ref) b_z^i(s2 - t_ref) ] * theta(s2 - s1)
// The bracket equals b_z^z(s1 - s2): independent of t_ref (tested property).
double contraction(const TlsParams& p, double s1, double s2, double t_ref);

// Free rotation of (sigma_x, sigma_y) under H0 = omega0 sigma_+ sigma_-:
// sigma_i(u) = R(omega0 u)_ij sigma_j with R a planar rotation,
// R = [[cos, -sin], [sin, cos]](omega0 u).
Eigen::Matrix2d jc_propagator(double omega0, double u);

// Matrix contraction for the rotating-frame two-operator pairing:
// entry (i, j) = -{sigma_i(s1), sigma_j(s2)} * theta(s2 - s1)
//              = -2 R(omega0 (s1 - s2))_ij * theta(s2 - s1).
Eigen::Matrix2d jc_contraction_matrix(double omega0, double s1, double s2);

// Cached propagator samples on a grid: b(-t_j) for j = 0..n_points-1 plus the
// closed-form evaluator. Rank matches the kernel it will be contracted with.
struct PropagatorTable {
    TimeGrid grid;
    bool jc{false};
    TlsParams tls{};    // used when jc == false
    double omega0{0.0}; // used when jc == true

    std::vector<Eigen::Matrix3d> b_minus;    // b(-t_j), spin-boson rank
    std::vector<Eigen::Matrix2d> r_minus;    // R(-omega0 t_j), rotating rank
    std::vector<double> bzz_line;            // b_z^z(t_j) (even function)

    static PropagatorTable build_tls(const TlsParams& p, const TimeGrid& grid);
    static PropagatorTable build_jc(double omega0, const TimeGrid& grid);
};

} // namespace qmek::propagator
