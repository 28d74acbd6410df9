#include "qmek/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qmek/errors.hpp"

namespace qmek::kernels {

namespace {

// Trapezoid weights on [0, t_index * h]; a degenerate interval carries none.
double trap_weight(int l, int t_index, double h) {
    if (t_index == 0) return 0.0;
    return (l == 0 || l == t_index) ? 0.5 * h : h;
}

// B components at one outer node from one resummed slice.
std::array<complexd, 4> node_coefficients(const ResumSlice& slice,
                                          const propagator::PropagatorTable& b,
                                          double chi, int k, double h,
                                          bath::KernelRank rank) {
    std::array<complexd, 4> out{};
    if (rank == bath::KernelRank::Scalar) {
        for (int l = 0; l <= k; ++l) {
            const double w = trap_weight(l, k, h);
            if (w == 0.0) continue;
            const complexd d = w * slice.scalar[l];
            const Eigen::Matrix3d& bm = b.b_minus[k - l]; // b(t_l - t_k)
            for (int i = 0; i < 3; ++i) out[i] += d * bm(2, i);
        }
    } else {
        Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
        for (int l = 0; l <= k; ++l) {
            const double w = trap_weight(l, k, h);
            if (w == 0.0) continue;
            acc += w * (slice.matrix[l] * b.r_minus[k - l].cast<complexd>());
        }
        out[0] = acc(0, 0);
        out[1] = acc(0, 1);
        out[2] = acc(1, 0);
        out[3] = acc(1, 1);
    }
    for (auto& v : out) v *= chi;
    return out;
}

} // namespace

// ---- contraction tables ----

ContractionTable make_contraction(const propagator::TlsParams& p,
                                  const TimeGrid& grid, double k0_sq) {
    ContractionTable t;
    t.grid = grid;
    t.rank = bath::KernelRank::Scalar;
    t.chi = k0_sq / 4.0;
    t.pre_scalar.resize(grid.n_points);
    for (int j = 0; j < grid.n_points; ++j)
        t.pre_scalar[j] = -2.0 * propagator::tls_bzz(p, grid.node(j));
    return t;
}

ContractionTable make_jc_contraction(double omega0, const TimeGrid& grid,
                                     double k0_sq) {
    ContractionTable t;
    t.grid = grid;
    t.rank = bath::KernelRank::Matrix2x2;
    t.chi = k0_sq / 4.0;
    t.pre_matrix.resize(grid.n_points);
    for (int j = 0; j < grid.n_points; ++j)
        t.pre_matrix[j] = -2.0 * propagator::jc_propagator(omega0, -grid.node(j));
    return t;
}

// ---- D-bar transform ----

complexd dbar_value(const bath::CorrelationKernel& base, int k, int l) {
    if (k > l) return base.value(k, l);
    if (k < l) return -std::conj(base.value(l, k));
    return 0.5 * (base.value(k, k) - std::conj(base.value(k, k)));
}

Eigen::Matrix2cd dbar_matrix_value(const bath::CorrelationKernel& base, int k,
                                   int l) {
    if (k > l) return base.matrix_value(k, l);
    if (k < l) {
        const Eigen::Matrix2cd d = base.matrix_value(l, k);
        return -d.adjoint();
    }
    const Eigen::Matrix2cd d = base.matrix_value(k, k);
    return 0.5 * (d - d.adjoint());
}

bath::CorrelationKernel dbar(const bath::CorrelationKernel& D) {
    bath::CorrelationKernel out(D.grid, D.rank);
    const int n = D.grid.n_points;
    if (D.rank == bath::KernelRank::Scalar) {
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) out.comps[0](k, l) = dbar_value(D, k, l);
        return out;
    }
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            const Eigen::Matrix2cd d = dbar_matrix_value(D, k, l);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) out.comps[2 * i + j](k, l) = d(i, j);
        }
    return out;
}

// ---- recursion ----

std::vector<complexd> next_kernel(const std::vector<complexd>& prev,
                                  const bath::CorrelationKernel& base,
                                  const ContractionTable& C, int t_index) {
    const double h = base.grid.step();
    const int m = t_index + 1;

    // inner pass: P(tn) = sum_sn w_sn C(sn, tn) v(sn)
    std::vector<complexd> P(m, complexd(0.0, 0.0));
    for (int tn = 0; tn < m; ++tn) {
        complexd acc(0.0, 0.0);
        for (int sn = 0; sn <= tn; ++sn) { // C gates to zero above tn
            const double c = C.scalar(sn, tn);
            if (c == 0.0) continue;
            acc += trap_weight(sn, t_index, h) * c * prev[sn];
        }
        P[tn] = acc;
    }

    // outer pass: v'(s1) = sum_tn w_tn [ dbar(tn, s1) P + D(tn, s1) conj(P) ]
    std::vector<complexd> out(m, complexd(0.0, 0.0));
    for (int s1 = 0; s1 < m; ++s1) {
        complexd acc(0.0, 0.0);
        for (int tn = 0; tn < m; ++tn) {
            const double w = trap_weight(tn, t_index, h);
            acc += w * (dbar_value(base, tn, s1) * P[tn] +
                        base.value(tn, s1) * std::conj(P[tn]));
        }
        out[s1] = acc;
    }
    return out;
}

std::array<std::vector<Eigen::RowVector2cd>, 2> next_kernel_matrix(
    const std::array<std::vector<Eigen::RowVector2cd>, 2>& prev,
    const bath::CorrelationKernel& base, const ContractionTable& C,
    int t_index) {
    const double h = base.grid.step();
    const int m = t_index + 1;

    std::array<std::vector<Eigen::RowVector2cd>, 2> out;
    for (int j = 0; j < 2; ++j) {
        std::vector<Eigen::RowVector2cd> P(m, Eigen::RowVector2cd::Zero());
        for (int tn = 0; tn < m; ++tn) {
            Eigen::RowVector2cd acc = Eigen::RowVector2cd::Zero();
            for (int sn = 0; sn <= tn; ++sn) {
                const double w = trap_weight(sn, t_index, h);
                if (w == 0.0) continue;
                acc += w * (prev[j][sn] * C.matrix(sn, tn).cast<complexd>());
            }
            P[tn] = acc;
        }
        out[j].assign(m, Eigen::RowVector2cd::Zero());
        for (int s1 = 0; s1 < m; ++s1) {
            Eigen::RowVector2cd acc = Eigen::RowVector2cd::Zero();
            for (int tn = 0; tn < m; ++tn) {
                const double w = trap_weight(tn, t_index, h);
                acc += w * (P[tn] * dbar_matrix_value(base, tn, s1) +
                            P[tn].conjugate() * base.matrix_value(tn, s1));
            }
            out[j][s1] = acc;
        }
    }
    return out;
}

KernelStack build_stack(const bath::CorrelationKernel& base,
                        const ContractionTable& C, int t_index, int n_max) {
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    KernelStack s;
    s.t_index = t_index;
    s.rank = base.rank;
    const int m = t_index + 1;

    if (base.rank == bath::KernelRank::Scalar) {
        s.levels.reserve(n_max);
        std::vector<complexd> first(m);
        for (int l = 0; l < m; ++l) first[l] = base.value(t_index, l);
        s.levels.push_back(std::move(first));
        for (int n = 2; n <= n_max; ++n)
            s.levels.push_back(next_kernel(s.levels.back(), base, C, t_index));
        return s;
    }

    std::array<std::vector<Eigen::RowVector2cd>, 2> first;
    for (int l = 0; l < m; ++l) {
        const Eigen::Matrix2cd v = base.matrix_value(t_index, l);
        first[0].push_back(v.row(0));
        first[1].push_back(v.row(1));
    }
    for (int j = 0; j < 2; ++j) s.row_levels[j].push_back(first[j]);
    for (int n = 2; n <= n_max; ++n) {
        std::array<std::vector<Eigen::RowVector2cd>, 2> prev = {
            s.row_levels[0].back(), s.row_levels[1].back()};
        auto next = next_kernel_matrix(prev, base, C, t_index);
        for (int j = 0; j < 2; ++j) s.row_levels[j].push_back(std::move(next[j]));
    }
    return s;
}

Eigen::Matrix2cd KernelStack::level_matrix(int n, int l) const {
    Eigen::Matrix2cd m;
    m.row(0) = row_levels[0][n - 1][l];
    m.row(1) = row_levels[1][n - 1][l];
    return m;
}

// ---- resummation ----

std::vector<ResumSlice> resum_truncated(const KernelStack& stack, int n_max) {
    if (n_max < 1 || n_max > stack.n_max())
        throw std::invalid_argument("requested order exceeds the built stack");
    const int m = stack.t_index + 1;
    std::vector<ResumSlice> out(n_max);

    if (stack.rank == bath::KernelRank::Scalar) {
        out[0].scalar = stack.levels[0];
        for (int n = 2; n <= n_max; ++n) {
            const double sign = (n % 2 == 0) ? -1.0 : 1.0;
            out[n - 1].scalar = out[n - 2].scalar;
            for (int l = 0; l < m; ++l)
                out[n - 1].scalar[l] += sign * stack.levels[n - 1][l];
        }
        return out;
    }

    out[0].matrix.resize(m);
    for (int l = 0; l < m; ++l) out[0].matrix[l] = stack.level_matrix(1, l);
    for (int n = 2; n <= n_max; ++n) {
        const double sign = (n % 2 == 0) ? -1.0 : 1.0;
        out[n - 1].matrix = out[n - 2].matrix;
        for (int l = 0; l < m; ++l)
            out[n - 1].matrix[l] += sign * stack.level_matrix(n, l);
    }
    return out;
}

ResolventSlice resum_resolvent(const bath::CorrelationKernel& base,
                               const ContractionTable& C, int t_index,
                               double cond_limit, bool exact_condition) {
    const double h = base.grid.step();
    const int m = t_index + 1;
    const bool scalar = (base.rank == bath::KernelRank::Scalar);

    // Real-linear operator K x = A x + B conj(x); stacked real system
    //   [ I + Ar + Br    Bi - Ai    ] [xr]   [dr]
    //   [     Ai + Bi    I + Ar - Br] [xi] = [di].
    Eigen::MatrixXd M;
    Eigen::MatrixXd rhs;

    if (scalar) {
        Eigen::MatrixXcd mdbar(m, m), md(m, m);
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(m, m);
        for (int tn = 0; tn < m; ++tn) {
            const double wtn = trap_weight(tn, t_index, h);
            for (int s1 = 0; s1 < m; ++s1) {
                mdbar(tn, s1) = dbar_value(base, tn, s1);
                md(tn, s1) = base.value(tn, s1);
            }
            for (int sn = 0; sn <= tn; ++sn)
                f(tn, sn) = wtn * trap_weight(sn, t_index, h) * C.scalar(sn, tn);
        }
        const Eigen::MatrixXcd fc = f.cast<complexd>();
        const Eigen::MatrixXcd A = mdbar.transpose() * fc;
        const Eigen::MatrixXcd B = md.transpose() * fc;

        M.setZero(2 * m, 2 * m);
        M.topLeftCorner(m, m) =
            Eigen::MatrixXd::Identity(m, m) + A.real() + B.real();
        M.topRightCorner(m, m) = B.imag() - A.imag();
        M.bottomLeftCorner(m, m) = A.imag() + B.imag();
        M.bottomRightCorner(m, m) =
            Eigen::MatrixXd::Identity(m, m) + A.real() - B.real();

        rhs.resize(2 * m, 1);
        for (int s1 = 0; s1 < m; ++s1) {
            const complexd d = base.value(t_index, s1);
            rhs(s1, 0) = d.real();
            rhs(m + s1, 0) = d.imag();
        }
    } else {
        // composite column index alpha = 2 sn + k, row index beta = 2 s1 + m'
        const int mc = 2 * m;
        std::vector<Eigen::Matrix2cd> db(m * m), dd(m * m);
        for (int tn = 0; tn < m; ++tn)
            for (int s1 = 0; s1 < m; ++s1) {
                db[tn * m + s1] = dbar_matrix_value(base, tn, s1);
                dd[tn * m + s1] = base.matrix_value(tn, s1);
            }
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(mc, mc);
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(mc, mc);
        for (int sn = 0; sn < m; ++sn) {
            const double wsn = trap_weight(sn, t_index, h);
            if (wsn == 0.0) continue;
            for (int s1 = 0; s1 < m; ++s1) {
                Eigen::Matrix2cd t1 = Eigen::Matrix2cd::Zero();
                Eigen::Matrix2cd t2 = Eigen::Matrix2cd::Zero();
                for (int tn = sn; tn < m; ++tn) { // C gates to zero below sn
                    const double wtn = trap_weight(tn, t_index, h);
                    if (wtn == 0.0) continue;
                    const Eigen::Matrix2cd c =
                        C.matrix(sn, tn).cast<complexd>();
                    t1 += wtn * (c * db[tn * m + s1]);
                    t2 += wtn * (c * dd[tn * m + s1]);
                }
                for (int k = 0; k < 2; ++k)
                    for (int mm = 0; mm < 2; ++mm) {
                        A(2 * s1 + mm, 2 * sn + k) = wsn * t1(k, mm);
                        B(2 * s1 + mm, 2 * sn + k) = wsn * t2(k, mm);
                    }
            }
        }

        M.setZero(2 * mc, 2 * mc);
        M.topLeftCorner(mc, mc) =
            Eigen::MatrixXd::Identity(mc, mc) + A.real() + B.real();
        M.topRightCorner(mc, mc) = B.imag() - A.imag();
        M.bottomLeftCorner(mc, mc) = A.imag() + B.imag();
        M.bottomRightCorner(mc, mc) =
            Eigen::MatrixXd::Identity(mc, mc) + A.real() - B.real();

        rhs.resize(2 * mc, 2); // one right-hand side per operator row
        for (int j = 0; j < 2; ++j)
            for (int s1 = 0; s1 < m; ++s1)
                for (int mm = 0; mm < 2; ++mm) {
                    const complexd d = base.entry(j, mm, t_index, s1);
                    rhs(2 * s1 + mm, j) = d.real();
                    rhs(mc + 2 * s1 + mm, j) = d.imag();
                }
    }

    double kappa = 0.0;
    Eigen::MatrixXd x;
    if (exact_condition) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU |
                                                  Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double smax = sv(0);
        const double smin = sv(sv.size() - 1);
        kappa = (smin > 0.0) ? smax / smin
                             : std::numeric_limits<double>::infinity();
        if (!(kappa <= cond_limit)) {
            std::ostringstream msg;
            msg << "resummation operator at node " << t_index
                << " is ill-conditioned (condition number " << kappa
                << " exceeds " << cond_limit
                << "); formal series divergent or operator singular";
            throw NumericalError("kernels", msg.str());
        }
        x = svd.solve(rhs);
    } else {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        const double rc = lu.rcond();
        kappa = (rc > 0.0) ? 1.0 / rc : std::numeric_limits<double>::infinity();
        if (!(kappa <= cond_limit)) {
            std::ostringstream msg;
            msg << "resummation operator at node " << t_index
                << " is ill-conditioned (reciprocal condition estimate " << rc
                << ", limit " << cond_limit
                << "); formal series divergent or operator singular";
            throw NumericalError("kernels", msg.str());
        }
        x = lu.solve(rhs);
    }

    ResolventSlice out;
    out.condition_number = kappa;
    if (scalar) {
        out.slice.scalar.resize(m);
        for (int s1 = 0; s1 < m; ++s1)
            out.slice.scalar[s1] = complexd(x(s1, 0), x(m + s1, 0));
    } else {
        const int mc = 2 * m;
        out.slice.matrix.assign(m, Eigen::Matrix2cd::Zero());
        for (int j = 0; j < 2; ++j)
            for (int s1 = 0; s1 < m; ++s1)
                for (int mm = 0; mm < 2; ++mm)
                    out.slice.matrix[s1](j, mm) =
                        complexd(x(2 * s1 + mm, j), x(mc + 2 * s1 + mm, j));
    }
    return out;
}

// ---- coefficients ----

complexd CoefficientTable::B_interp(int comp, double t) const {
    const double tmax = grid.t_max;
    const double tol = 1e-12 * tmax;
    if (t < -tol || t > tmax + tol)
        throw std::invalid_argument(
            "coefficient interpolation outside the table domain");
    const auto& v = orders[active_order - 1][comp];
    const double x = std::clamp(t, 0.0, tmax);
    if (x <= 0.0) return v.front();
    if (x >= tmax) return v.back();
    const double pos = x / grid.step();
    const int k = std::min(static_cast<int>(pos), grid.n_points - 2);
    const double frac = pos - k;
    return (1.0 - frac) * v[k] + frac * v[k + 1];
}

CoefficientTable coefficients(const std::vector<ResumSlice>& slices,
                              const propagator::PropagatorTable& b,
                              double k0_sq, const TimeGrid& grid) {
    if (static_cast<int>(slices.size()) != grid.n_points)
        throw std::invalid_argument("one resummed slice per outer node required");
    CoefficientTable T;
    T.grid = grid;
    T.rank = b.jc ? bath::KernelRank::Matrix2x2 : bath::KernelRank::Scalar;
    T.k0_sq = k0_sq;
    T.n_max = 1;
    T.active_order = 1;
    T.tls = b.tls;
    T.omega0 = b.omega0;
    T.orders.resize(1);
    for (auto& comp : T.orders[0]) comp.assign(grid.n_points, complexd(0.0, 0.0));

    const double h = grid.step();
    const double chi = k0_sq / 4.0;
    for (int k = 0; k < grid.n_points; ++k) {
        const auto bc = node_coefficients(slices[k], b, chi, k, h, T.rank);
        for (int c = 0; c < 4; ++c) T.orders[0][c][k] = bc[c];
    }
    return T;
}

CoefficientTable build_coefficients(const bath::CorrelationKernel& base,
                                    const ContractionTable& C,
                                    const propagator::PropagatorTable& b,
                                    double k0_sq, int n_max, ResumMethod method,
                                    ExecPolicy policy) {
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    const TimeGrid& grid = base.grid;
    const int n = grid.n_points;
    const double h = grid.step();
    const double chi = k0_sq / 4.0;

    CoefficientTable T;
    T.grid = grid;
    T.rank = base.rank;
    T.k0_sq = k0_sq;
    T.n_max = n_max;
    T.tls = b.tls;
    T.omega0 = b.omega0;
    const bool truncated = (method == ResumMethod::Truncated);
    T.active_order = truncated ? n_max : 1;
    T.series_status = truncated ? series_status_label(n_max)
                                : "series approximation (see Erratum)";
    T.orders.resize(truncated ? n_max : 1);
    for (auto& ord : T.orders)
        for (auto& comp : ord) comp.assign(n, complexd(0.0, 0.0));
    if (!truncated) T.condition_numbers.assign(n, 0.0);

    auto process = [&](int k) {
        if (truncated) {
            const auto stack = build_stack(base, C, k, n_max);
            const auto partials = resum_truncated(stack, n_max);
            for (int o = 1; o <= n_max; ++o) {
                const auto bc =
                    node_coefficients(partials[o - 1], b, chi, k, h, base.rank);
                for (int c = 0; c < 4; ++c) T.orders[o - 1][c][k] = bc[c];
            }
        } else {
            // exact 2-norm condition number at the final node (the reported
            // figure); cheap estimates guard every other solve
            const auto r = resum_resolvent(base, C, k, 1e12, k == n - 1);
            T.condition_numbers[k] = r.condition_number;
            const auto bc = node_coefficients(r.slice, b, chi, k, h, base.rank);
            for (int c = 0; c < 4; ++c) T.orders[0][c][k] = bc[c];
        }
    };

    // Nodes are independent; per-node arithmetic is identical under both
    // policies, so results match bit for bit.
    std::exception_ptr err = nullptr;
    std::atomic<bool> failed{false};
    if (policy == ExecPolicy::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int k = 0; k < n; ++k) {
            if (failed.load(std::memory_order_relaxed)) continue;
            try {
                process(k);
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                {
                    if (!err) err = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        }
    } else {
        for (int k = 0; k < n && !err; ++k) {
            try {
                process(k);
            } catch (...) {
                err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
    return T;
}

CoefficientTable dephasing_coefficients(const std::vector<complexd>& line,
                                        double k0_sq, const TimeGrid& grid,
                                        const propagator::TlsParams& tls) {
    if (tls.delta != 0.0)
        throw std::invalid_argument(
            "closed dephasing build requires zero tunneling");
    if (static_cast<int>(line.size()) != grid.n_points)
        throw std::invalid_argument("kernel line length must match the grid");

    CoefficientTable T;
    T.grid = grid;
    T.rank = bath::KernelRank::Scalar;
    T.k0_sq = k0_sq;
    T.n_max = 1;
    T.active_order = 1;
    T.tls = tls;
    T.series_status = series_status_label(1);
    T.orders.resize(1);
    for (auto& comp : T.orders[0]) comp.assign(grid.n_points, complexd(0.0, 0.0));

    // prefix trapezoid of the stationary line: B_zz(t_k) = chi * integral
    const double h = grid.step();
    const double chi = k0_sq / 4.0;
    complexd acc(0.0, 0.0);
    for (int k = 1; k < grid.n_points; ++k) {
        acc += 0.5 * h * (line[k - 1] + line[k]);
        T.orders[0][2][k] = chi * acc;
    }
    return T;
}

} // namespace qmek::kernels
