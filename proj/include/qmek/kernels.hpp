#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "qmek/bath.hpp"
#include "qmek/grid.hpp"
#include "qmek/propagator.hpp"

namespace qmek::kernels {

using bath::complexd;

enum class ExecPolicy { Serial, Parallel };
enum class ResumMethod { Truncated, Resolvent };

// ---- coupling-weighted contraction samples ----
//
// The recursion consumes the contraction with one factor of the squared
// coupling folded in per level: chi = k0_sq / 4 (two interaction vertices per
// pairing). For the rotating-wave model the mode weight lives inside the
// kernel, so the structural weight is chi = 1/4 (pass k0_sq = 1).
struct ContractionTable {
    TimeGrid grid;
    bath::KernelRank rank{bath::KernelRank::Scalar};
    double chi{0.25};

    // pre_scalar[j] = -2 * b_z^z(j * h); value(s, t) gates with theta(t - s).
    std::vector<double> pre_scalar;
    // pre_matrix[j] = -2 * R(-omega0 * j * h) for lag j = t_idx - s_idx >= 0.
    std::vector<Eigen::Matrix2d> pre_matrix;

    // chi * (-2 b_z^z(s - t)) * theta(t - s), evaluated at grid nodes.
    double scalar(int s_idx, int t_idx) const {
        int j = t_idx - s_idx;
        if (j < 0) return 0.0;
        double gate = (j == 0) ? 0.5 : 1.0;
        return chi * pre_scalar[j] * gate;
    }

    // chi * (-2 R(omega0 (s - t))) * theta(t - s), evaluated at grid nodes.
    Eigen::Matrix2d matrix(int s_idx, int t_idx) const {
        int j = t_idx - s_idx;
        if (j < 0) return Eigen::Matrix2d::Zero();
        double gate = (j == 0) ? 0.5 : 1.0;
        return (chi * gate) * pre_matrix[j];
    }
};

ContractionTable make_contraction(const propagator::TlsParams& p,
                                  const TimeGrid& grid, double k0_sq);
ContractionTable make_jc_contraction(double omega0, const TimeGrid& grid,
                                     double k0_sq = 1.0);

// ---- D-bar transform ----
//
// dbar(D)(t, s) = theta_{ts} D(t, s) - theta_{st} conj(D(s, t))  (entrywise
// transpose-conjugate for matrix rank), theta(0) = 1/2 on the diagonal.
// For Hermitian-in-arguments kernels this equals D above the diagonal and
// -conj(D(s, t)) below it, with zero diagonal.
bath::CorrelationKernel dbar(const bath::CorrelationKernel& D);

// Pointwise forms used inside the recursion (no full-grid materialization).
complexd dbar_value(const bath::CorrelationKernel& base, int k, int l);
Eigen::Matrix2cd dbar_matrix_value(const bath::CorrelationKernel& base, int k, int l);

// ---- the kernel recursion ----
//
// Level vectors are one outer-time slices: v_n[l] = D_(n)(t, t_l), l = 0..t_index.
// The recursion (trapezoid double quadrature on [0, t]; smooth kernels):
//   D_(n)(t, s1) = sum_{tn, sn} w w C(sn, tn) [ dbar(tn, s1) D_(n-1)(t, sn)
//                                             + D(tn, s1) conj(D_(n-1)(t, sn)) ]
// evaluated in two O(m^2) passes via the inner sum P(tn) = sum_sn w C(sn,tn) v(sn).
//
// Matrix rank: rows j in {x, y} propagate independently,
//   D_(n),jm(t, s1) = sum w w C_kl(sn, tn) [ dbar_lm(tn, s1) D_(n-1),jk(t, sn)
//                                          + D_lm(tn, s1) conj(D_(n-1),jk(t, sn)) ].
struct KernelStack {
    int t_index{0};
    bath::KernelRank rank{bath::KernelRank::Scalar};
    // scalar rank: levels[n-1][l]
    std::vector<std::vector<complexd>> levels;
    // matrix rank: row_levels[j][n-1][l] is row j of D_(n)(t, t_l)
    std::array<std::vector<std::vector<Eigen::RowVector2cd>>, 2> row_levels;

    int n_max() const {
        return rank == bath::KernelRank::Scalar ? static_cast<int>(levels.size())
                                                : static_cast<int>(row_levels[0].size());
    }
    Eigen::Matrix2cd level_matrix(int n, int l) const; // 1-based order n
};

// One recursion step, scalar rank. prev has t_index + 1 entries.
std::vector<complexd> next_kernel(const std::vector<complexd>& prev,
                                  const bath::CorrelationKernel& base,
                                  const ContractionTable& C, int t_index);

// One recursion step, matrix rank (both rows).
std::array<std::vector<Eigen::RowVector2cd>, 2> next_kernel_matrix(
    const std::array<std::vector<Eigen::RowVector2cd>, 2>& prev,
    const bath::CorrelationKernel& base, const ContractionTable& C, int t_index);

// Levels 1..n_max at outer node t_index (level 1 = base kernel slice).
KernelStack build_stack(const bath::CorrelationKernel& base,
                        const ContractionTable& C, int t_index, int n_max);

// ---- resummation ----

// One outer-time slice of the resummed kernel.
struct ResumSlice {
    std::vector<complexd> scalar;          // scalar rank
    std::vector<Eigen::Matrix2cd> matrix;  // matrix rank
};

// Alternating partial sums S_n = sum_{m=1..n} (-1)^(m-1) D_(m); returns all
// orders 1..n_max (the full truncation is the last element).
std::vector<ResumSlice> resum_truncated(const KernelStack& stack, int n_max);

struct ResolventSlice {
    ResumSlice slice;
    double condition_number{0.0};
};

// Direct solve of (1 + K) x = D(t, .) for the resummed slice, where K is the
// discretized recursion operator (real-linear because of the conjugation).
// Reports the condition number of the stacked real system and throws
// NumericalError when it exceeds cond_limit (series divergent / operator
// singular at these parameters). exact_condition = true computes the 2-norm
// number by SVD (O(m^3) with a large constant — reporting use);
// false solves by LU and guards with the reciprocal-condition estimate.
ResolventSlice resum_resolvent(const bath::CorrelationKernel& base,
                               const ContractionTable& C, int t_index,
                               double cond_limit = 1e12,
                               bool exact_condition = true);

// ---- master-equation coefficients ----

inline const char* series_status_label(int n_max) {
    return n_max >= 2 ? "series approximation (see Erratum)" : "TCL2-equivalent";
}

// Component layout: spin-boson 0=zx, 1=zy, 2=zz; rotating-wave 0=xx, 1=xy,
// 2=yx, 3=yy. B entries are complex; the equations of motion consume Re/Im
// separately.
struct CoefficientTable {
    TimeGrid grid;
    bath::KernelRank rank{bath::KernelRank::Scalar};
    double k0_sq{1.0};
    int n_max{1};
    int active_order{1}; // order whose coefficients drive the dynamics
    propagator::TlsParams tls{};
    double omega0{0.0};
    std::string series_status;

    // orders[n-1][component][node]
    std::vector<std::array<std::vector<complexd>, 4>> orders;

    // resolvent builds record per-node condition numbers
    std::vector<double> condition_numbers;

    complexd B(int order, int comp, int k) const {
        return orders[order - 1][comp][k];
    }
    // Linear interpolation between nodes of the active order; domain-checked.
    complexd B_interp(int comp, double t) const;

    int components() const { return rank == bath::KernelRank::Scalar ? 3 : 4; }
};

// Literal coefficient integral for externally supplied resummed slices
// (one slice per outer node):
//   spin-boson: B_zi(t) = (k0^2/4) * sum_l w_l  D(t, t_l) b_z^i(t_l - t)
//   rotating:   B_ij(t) = (k0^2/4) * sum_l w_l [D(t, t_l) R(omega0 (t_l - t))]_ij
CoefficientTable coefficients(const std::vector<ResumSlice>& slices,
                              const propagator::PropagatorTable& b,
                              double k0_sq, const TimeGrid& grid);

// Full pipeline: for every outer node build the stack, resum, contract with
// the propagator rows. Truncated method fills per-order tables 1..n_max;
// resolvent method fills a single table plus per-node condition estimates
// (exact 2-norm number at the final node only — the estimates guard every
// solve, the exact number is the reported figure).
// Outer nodes are independent; Parallel runs them across threads with
// identical per-node arithmetic (bitwise-deterministic output).
CoefficientTable build_coefficients(const bath::CorrelationKernel& base,
                                    const ContractionTable& C,
                                    const propagator::PropagatorTable& b,
                                    double k0_sq, int n_max,
                                    ResumMethod method = ResumMethod::Truncated,
                                    ExecPolicy policy = ExecPolicy::Parallel);

// Closed pure-dephasing limit (delta = 0): B_zz(t_k) = (k0^2/4) * prefix
// trapezoid of the stationary kernel line, B_zx = B_zy = 0. O(N) build,
// suitable for fine grids where the dense kernel would not fit.
CoefficientTable dephasing_coefficients(const std::vector<complexd>& line,
                                        double k0_sq, const TimeGrid& grid,
                                        const propagator::TlsParams& tls);

} // namespace qmek::kernels
