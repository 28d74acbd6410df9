#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "qmek/grid.hpp"
#include "qmek/kernels.hpp"
#include "qmek/spectral.hpp"

namespace qmek::dynamics {

using bath::complexd;

// ---- state representations ----

using BlochVector = Eigen::Vector3d;
using Qubit2x2 = Eigen::Matrix2cd;

// rho = (1/2)(I + v . sigma); inverse checks Hermiticity and unit trace.
Qubit2x2 rho_from_bloch(const BlochVector& v);
BlochVector bloch_from_rho(const Qubit2x2& rho, double tol = 1e-9);

// ---- spin-boson equations of motion ----
//
// d v / d t = Bmat(t) v + s(t) with
//   Bmat = [ -4 Re B_zz(t)   -epsilon        4 Re B_zx(t)        ]
//          [  epsilon        -4 Re B_zz(t)   4 Re B_zy(t) + delta]
//          [  0              -delta          0                   ]
//   s    = ( -4 Im B_zy(t),  4 Im B_zx(t),  0 )
BlochVector bloch_rhs(const kernels::CoefficientTable& B, const BlochVector& v,
                      double t);

struct BlochTrajectory {
    std::vector<double> t;
    std::vector<BlochVector> v;
    double max_norm{0.0};        // max |v| over the trajectory
    bool positivity_ok{true};    // |v| <= 1 + 1e-9 throughout
};

// Classic RK4 with substep h/4 on the coefficient grid (coefficients linearly
// interpolated between nodes); samples are returned on the grid nodes.
// Throws std::invalid_argument if grid extends beyond the coefficient table.
BlochTrajectory evolve_bloch(const kernels::CoefficientTable& B,
                             const BlochVector& v0, const TimeGrid& grid);

// ---- exact pure-dephasing reference ----
//
// delta must be zero (domain error otherwise). The transverse component obeys
//   v_-(t) = v_-(0) exp(-i epsilon t) exp(-Gamma(t)),
//   Gamma(t) = k0_sq * Int_0^inf dw J(w) coth(beta w / 2) (1 - cos w t) / w^2,
// and v_z is constant. The commutator phase beyond the epsilon rotation
// vanishes identically for this coupling.
BlochTrajectory pure_dephasing_exact(const bath::SpectralModel& model,
                                     double k0_sq, double epsilon, double delta,
                                     const BlochVector& v0, const TimeGrid& grid);

// Gamma(t) alone (same quadrature; exposed for direct checks).
double dephasing_exponent(const bath::SpectralModel& model, double k0_sq,
                          double t, double rel_tol = 1e-10);

// ---- rotating-wave (density-matrix) equations of motion ----

struct DensityTrajectory {
    std::vector<double> t;
    std::vector<Qubit2x2> rho;
    std::vector<double> gamma_minus;  // 4 (Re B_xx - Im B_xy) sampled on nodes
    std::vector<double> gamma_plus;   // 4 (Re B_xx + Im B_xy)
    double max_trace_dev{0.0};
    double max_herm_dev{0.0};
    bool negative_rate{false}; // any transient gamma_-(t) < 0 (integrated as-is)
};

// rho' = -i[H0, rho] - sum_ij { B_ij (s_i s_j rho - s_j rho s_i) + h.c. },
// H0 = (omega0 / 2) sigma_z, s_i in {sigma_x, sigma_y}. RK4 substep h/4.
DensityTrajectory evolve_jc(const kernels::CoefficientTable& B,
                            const Qubit2x2& rho0, double omega0,
                            const TimeGrid& grid);

// ---- Markovian reference channel ----
//
// rho' = r(t) (sigma_z rho sigma_z - rho); the caller supplies the full
// composite rate r(t) (coupling included). Constant r = R gives
// |rho_01(t)| = |rho_01(0)| exp(-2 R t).
struct MarkovTrajectory {
    std::vector<double> t;
    std::vector<Qubit2x2> rho;
    bool negative_rate{false};
};

MarkovTrajectory markov_evolve(const std::function<double(double)>& rate,
                               const Qubit2x2& rho0, const TimeGrid& grid);

} // namespace qmek::dynamics
