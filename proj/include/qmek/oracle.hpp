#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "qmek/dynamics.hpp"
#include "qmek/grid.hpp"

namespace qmek::oracle {

using bath::complexd;

// ---- discrete bath description ----

struct Mode {
    double omega{1.0};   // mode frequency
    double g_sq{0.0};    // squared coupling weight (delta-peak weight in J)
    int fock_cutoff{8};  // Fock levels kept for this mode
};

struct DiscreteBathSpec {
    std::vector<Mode> modes;
    double temperature{0.0};

    // Throws std::invalid_argument unless 0 < total dimension <= 4096
    // (TLS factor of 2 included) and all entries are physical.
    void validate() const;
    int bath_dimension() const;
};

// ---- model parameter packs ----

struct SpinBosonModel {
    double delta{1.0};
    double epsilon{1.0};
    double k0{1.0};
};

struct RabiModel {
    double omega0{1.0}; // qubit splitting; coupling via the bath spec weights
};

struct JaynesCummingsModel {
    double omega0{1.0};
};

// ---- exact finite-bath machinery ----
//
// Composite basis: kron(TLS, bath); row index = s * d_bath + b. The coupling
// operator for mode j is sqrt(g_sq_j) (a_j + a_j^dag), i.e. a delta-peak
// spectral density J(w) = g_sq_j delta(w - w_j) per mode, so the exact side
// and the master-equation side consume the same weights and units.
Eigen::MatrixXcd build_hamiltonian(const DiscreteBathSpec& bath,
                                   const SpinBosonModel& m);
Eigen::MatrixXcd build_hamiltonian(const DiscreteBathSpec& bath,
                                   const RabiModel& m);
Eigen::MatrixXcd build_hamiltonian(const DiscreteBathSpec& bath,
                                   const JaynesCummingsModel& m);

// Per-mode thermal occupation tail beyond the cutoff is exp(-w c / T); the
// builders demand it be <= 1e-8. ensure_thermal_cutoffs returns a copy with
// each cutoff raised until that holds, throwing NumericalError if the total
// dimension budget (4096) cannot accommodate the required resolution.
DiscreteBathSpec ensure_thermal_cutoffs(DiscreteBathSpec bath,
                                        double tail_tol = 1e-8);

// Bath-only thermal state, product over modes. Throws NumericalError if any
// mode's occupation tail exceeds the tolerance at its declared cutoff (run
// ensure_thermal_cutoffs first).
Eigen::MatrixXcd thermal_state(const DiscreteBathSpec& bath);

struct OracleTrajectory {
    std::vector<double> t;
    std::vector<dynamics::Qubit2x2> rho;  // reduced TLS state
    double max_trace_dev{0.0};
    double min_eigenvalue{0.0};          // most negative reduced eigenvalue seen
};

// Dense eigendecomposition once, then rho(t) = V (E(t) o W o E(t)^dag) V^dag
// with W = V^dag rho0 V; partial trace over the bath at each node.
OracleTrajectory evolve_exact(const Eigen::MatrixXcd& H,
                              const Eigen::MatrixXcd& rho_total0,
                              const TimeGrid& grid);

// Initial product state helper: rho_TLS kron thermal bath.
Eigen::MatrixXcd product_state(const dynamics::Qubit2x2& rho_tls,
                               const DiscreteBathSpec& bath);

// ---- correlation certification ----
//
// Checks the analytic discrete-bath correlation (sum over modes) against the
// Heisenberg-picture expectation <phi(t) phi(0)> computed from the
// eigen-decomposition of the bath Hamiltonian alone.
struct CertifyReport {
    double max_abs_dev{0.0};
    double scale{0.0}; // max |C| over the grid, for relative judgements
    bool passed{false};
};

CertifyReport certify_correlation(const DiscreteBathSpec& bath,
                                  const TimeGrid& grid, double tol = 1e-8);

// ---- trajectory comparison ----

struct CompareReport {
    double max_trace_distance{0.0};
    int argmax_index{0};
    std::vector<double> trace_distance; // per node
};

CompareReport compare(const std::vector<dynamics::Qubit2x2>& me,
                      const OracleTrajectory& oracle);

} // namespace qmek::oracle
