#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "qmek/bath.hpp"
#include "qmek/errors.hpp"
#include "qmek/kernels.hpp"
#include "qmek/propagator.hpp"

using namespace qmek;
using bath::complexd;
using propagator::TlsParams;

namespace {

constexpr double kPi = 3.14159265358979323846;

double trap_weight(int l, int t_index, double h) {
    if (t_index == 0) return 0.0;
    return (l == 0 || l == t_index) ? 0.5 * h : h;
}

complexd dbar_ref(const bath::CorrelationKernel& base, int k, int l) {
    if (k > l) return base.value(k, l);
    if (k < l) return -std::conj(base.value(l, k));
    return 0.5 * (base.value(k, k) - std::conj(base.value(k, k)));
}

Eigen::Matrix2cd dbar_ref_m(const bath::CorrelationKernel& base, int k, int l) {
    if (k > l) return base.matrix_value(k, l);
    if (k < l) return -base.matrix_value(l, k).adjoint().eval();
    Eigen::Matrix2cd d = base.matrix_value(k, k);
    return 0.5 * (d - d.adjoint().eval());
}

// recursion step straight from the definition (quadruple loop), scalar rank
std::vector<complexd> brute_next(const std::vector<complexd>& prev,
                                 const bath::CorrelationKernel& base,
                                 const TlsParams& p, double chi, int t_index) {
    double h = base.grid.step();
    std::vector<complexd> out(t_index + 1, complexd(0.0, 0.0));
    for (int s1 = 0; s1 <= t_index; ++s1) {
        complexd acc(0.0, 0.0);
        for (int tn = 0; tn <= t_index; ++tn) {
            complexd db = dbar_ref(base, tn, s1);
            complexd dd = base.value(tn, s1);
            for (int sn = 0; sn <= t_index; ++sn) {
                double c = chi * propagator::contraction(p, base.grid.node(sn),
                                                         base.grid.node(tn), 0.0);
                if (c == 0.0) continue;
                acc += trap_weight(tn, t_index, h) * trap_weight(sn, t_index, h) *
                       c * (db * prev[sn] + dd * std::conj(prev[sn]));
            }
        }
        out[s1] = acc;
    }
    return out;
}

// recursion step from the definition, matrix rank; transpose_prev exercises
// the rejected index placement (first factor contracted on its left index).
std::vector<Eigen::Matrix2cd> brute_next_m(const std::vector<Eigen::Matrix2cd>& prev,
                                           const bath::CorrelationKernel& base,
                                           double omega0, double chi, int t_index,
                                           bool transpose_prev) {
    double h = base.grid.step();
    std::vector<Eigen::Matrix2cd> out(t_index + 1, Eigen::Matrix2cd::Zero());
    for (int s1 = 0; s1 <= t_index; ++s1) {
        Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
        for (int tn = 0; tn <= t_index; ++tn) {
            Eigen::Matrix2cd db = dbar_ref_m(base, tn, s1);
            Eigen::Matrix2cd dd = base.matrix_value(tn, s1);
            for (int sn = 0; sn <= t_index; ++sn) {
                Eigen::Matrix2cd c =
                    (chi * propagator::jc_contraction_matrix(
                               omega0, base.grid.node(sn), base.grid.node(tn)))
                        .cast<complexd>();
                if (c.cwiseAbs().maxCoeff() == 0.0) continue;
                Eigen::Matrix2cd v = prev[sn];
                if (transpose_prev) v.transposeInPlace();
                acc += trap_weight(tn, t_index, h) * trap_weight(sn, t_index, h) *
                       (v * c * db + v.conjugate() * c * dd);
            }
        }
        out[s1] = acc;
    }
    return out;
}

bath::SpectralModel fig1_model(double temperature) {
    return bath::SpectralModel::ohmic_gaussian(2.0 * kPi, 20.0, temperature);
}

// constant unit kernel (stationary, Hermitian) on a grid
bath::CorrelationKernel unit_kernel(const TimeGrid& grid) {
    return bath::make_stationary_kernel(
        grid, [](double) { return complexd(1.0, 0.0); });
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("contraction table folds the coupling weight and the step gate") {
    TlsParams p{10.0, 10.0};
    TimeGrid grid(0.5, 11);
    double k0_sq = 0.4;
    auto C = kernels::make_contraction(p, grid, k0_sq);
    CHECK(C.chi == doctest::Approx(0.1).epsilon(1e-15));
    for (int s = 0; s < grid.n_points; ++s)
        for (int t = 0; t < grid.n_points; ++t) {
            double want = 0.1 * propagator::contraction(p, grid.node(s),
                                                        grid.node(t), 0.0);
            CHECK(C.scalar(s, t) == doctest::Approx(want).epsilon(1e-13));
        }

    auto Cj = kernels::make_jc_contraction(10.0, grid, 1.0);
    for (int s = 0; s < grid.n_points; ++s)
        for (int t = 0; t < grid.n_points; ++t) {
            Eigen::Matrix2d want = 0.25 * propagator::jc_contraction_matrix(
                                              10.0, grid.node(s), grid.node(t));
            CHECK((Cj.matrix(s, t) - want).cwiseAbs().maxCoeff() < 1e-13);
        }
}

TEST_CASE("dbar transform: triangles, diagonal, Hermitian shortcut") {
    TimeGrid grid(1.0, 6);
    auto k = bath::make_stationary_kernel(
        grid, [](double tau) { return std::exp(complexd(0.0, tau)); });
    auto d = kernels::dbar(k);
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
            complexd want = (a > b)   ? k.value(a, b)
                            : (a < b) ? -std::conj(k.value(b, a))
                                      : complexd(0.0, 0.0);
            CHECK(std::abs(d.value(a, b) - want) < 1e-15);
            // Hermitian base: dbar = (2 theta - 1) D pointwise
            double sgn = (a > b) ? 1.0 : (a < b ? -1.0 : 0.0);
            CHECK(std::abs(d.value(a, b) - sgn * k.value(a, b)) < 1e-14);
        }

    // non-Hermitian synthetic diagonal keeps only the anti-Hermitian part
    bath::CorrelationKernel syn(TimeGrid(1.0, 3), bath::KernelRank::Scalar);
    syn.comps[0].setZero();
    syn.comps[0](1, 1) = complexd(3.0, 2.0);
    auto ds = kernels::dbar(syn);
    CHECK(std::abs(ds.value(1, 1) - complexd(0.0, 2.0)) < 1e-15);
    CHECK(kernels::dbar_value(syn, 1, 1) == ds.value(1, 1));
}

TEST_CASE("first level of the stack is the base slice, bit for bit") {
    auto m = fig1_model(1.0);
    TimeGrid grid(0.3, 31);
    auto base = bath::build_correlation(m, grid);
    auto C = kernels::make_contraction(TlsParams{10.0, 10.0}, grid, 0.4);
    auto stack = kernels::build_stack(base, C, 20, 3);
    CHECK(stack.n_max() == 3);
    for (int l = 0; l <= 20; ++l)
        CHECK(stack.levels[0][l] == base.value(20, l));
    // degenerate outer time: higher levels vanish
    auto s0 = kernels::build_stack(base, C, 0, 3);
    CHECK(std::abs(s0.levels[1][0]) == 0.0);
    CHECK(std::abs(s0.levels[2][0]) == 0.0);
}

TEST_CASE("constant kernel: levels two and three match closed forms") {
    // For a unit kernel at zero tunneling the recursion integrals are
    // polynomial:  D2(t, s) = -2 chi (t^2 - s^2),
    //              D3(t, s) = chi^2 [4 t^2 (t^2 - s^2) - (2/3)(t^4 - s^4)].
    TlsParams p{0.0, 3.0};
    double chi = 0.25; // k0_sq = 1
    TimeGrid grid(1.0, 251);
    auto base = unit_kernel(grid);
    auto C = kernels::make_contraction(p, grid, 1.0);
    int t_idx = grid.n_points - 1, s_idx = (grid.n_points - 1) / 2;
    auto stack = kernels::build_stack(base, C, t_idx, 3);
    // The discrete value is the closed form plus exactly chi h^2 / 2: the
    // inner trapezoid at the final outer node pairs the end weight h/2 with
    // the half-gate at s = t, leaving a deficit of h/4 there.
    const double h = grid.step();
    CHECK(stack.levels[1][s_idx].real() ==
          doctest::Approx(-0.375 + 0.5 * chi * h * h).epsilon(1e-9));
    CHECK(std::abs(stack.levels[1][s_idx].imag()) < 1e-14);
    CHECK(stack.levels[2][s_idx].real() ==
          doctest::Approx(0.1484375).epsilon(1e-4));

    // third level discretization error shrinks at second order in the step
    std::vector<double> hs, errs;
    for (int n : {251, 501, 1001}) {
        TimeGrid g(1.0, n);
        auto b = unit_kernel(g);
        auto c = kernels::make_contraction(p, g, 1.0);
        auto st = kernels::build_stack(b, c, n - 1, 3);
        double err = std::abs(st.levels[2][(n - 1) / 2].real() - 0.1484375);
        hs.push_back(g.step());
        errs.push_back(err);
    }
    double slope = std::log(errs.front() / errs.back()) /
                   std::log(hs.front() / hs.back());
    CHECK(slope == doctest::Approx(2.0).epsilon(0.15));

    // alternating partial sums walk toward the resolvent value
    auto partials = kernels::resum_truncated(stack, 3);
    CHECK(partials.size() == 3);
    CHECK(partials[0].scalar[s_idx] == stack.levels[0][s_idx]);
    CHECK(std::abs(partials[1].scalar[s_idx] -
                   (stack.levels[0][s_idx] - stack.levels[1][s_idx])) < 1e-15);
    CHECK(std::abs(partials[2].scalar[s_idx] -
                   (partials[1].scalar[s_idx] + stack.levels[2][s_idx])) < 1e-15);
}

TEST_CASE("constant kernel: resolvent slice and coefficient match closed forms") {
    // (1 + K) x = 1 with the unit kernel solves to
    // x(s) = cos(2 sqrt(chi) s) / cos(2 sqrt(chi) t), so the zz coefficient is
    // chi tan(2 sqrt(chi) t) / (2 sqrt(chi)).
    TlsParams p{0.0, 3.0};
    TimeGrid grid(1.0, 251);
    auto base = unit_kernel(grid);
    auto C = kernels::make_contraction(p, grid, 1.0); // chi = 1/4
    int t_idx = grid.n_points - 1;
    auto r = kernels::resum_resolvent(base, C, t_idx);
    CHECK(r.condition_number > 1.0);
    CHECK(r.condition_number < 1e3);
    int s_idx = t_idx / 2;
    CHECK(r.slice.scalar[s_idx].real() ==
          doctest::Approx(1.6242435991093955).epsilon(5e-4));
    CHECK(std::abs(r.slice.scalar[s_idx].imag()) < 1e-12);

    double h = grid.step(), acc = 0.0;
    for (int l = 0; l <= t_idx; ++l)
        acc += trap_weight(l, t_idx, h) * r.slice.scalar[l].real();
    double b_zz = 0.25 * acc;
    CHECK(b_zz == doctest::Approx(0.3893519311637256).epsilon(5e-4));

    // fast-guard variant agrees with the exact-condition variant
    auto rf = kernels::resum_resolvent(base, C, t_idx, 1e12, false);
    double scale = 0.0, dev = 0.0;
    for (int l = 0; l <= t_idx; ++l) {
        scale = std::max(scale, std::abs(r.slice.scalar[l]));
        dev = std::max(dev, std::abs(r.slice.scalar[l] - rf.slice.scalar[l]));
    }
    CHECK(dev <= 1e-10 * scale);
    CHECK(rf.condition_number > 1.0);
}

TEST_CASE("resolvent throws where the formal series has its pole") {
    // The closed form above has a pole at 2 sqrt(chi) t = pi/2; near it the
    // discrete operator is singular and the solve must refuse.
    TlsParams p{0.0, 3.0};
    TimeGrid grid(1.0, 61);
    auto base = unit_kernel(grid);
    int t_idx = grid.n_points - 1;
    double h = grid.step();

    // independent locate: for the real constant kernel the stacked system
    // decouples and the singular block is I + A + B with
    // A[s1][sn] = sum_tn w w C(sn,tn) sgn(tn - s1), B likewise with 1.
    auto det_sign = [&](double chi) {
        int n = t_idx + 1;
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
        for (int s1 = 0; s1 < n; ++s1)
            for (int sn = 0; sn < n; ++sn) {
                double acc = 0.0;
                for (int tn = 0; tn < n; ++tn) {
                    double c = chi * propagator::contraction(
                                         p, grid.node(sn), grid.node(tn), 0.0);
                    if (c == 0.0) continue;
                    double sgn = (tn > s1) ? 1.0 : (tn < s1 ? -1.0 : 0.0);
                    acc += trap_weight(tn, t_idx, h) * trap_weight(sn, t_idx, h) *
                           c * (sgn + 1.0);
                }
                M(s1, sn) += acc;
            }
        return Eigen::FullPivLU<Eigen::MatrixXd>(M).determinant() > 0.0 ? 1 : -1;
    };
    double lo = 0.55, hi = 0.68;
    REQUIRE(det_sign(lo) != det_sign(hi));
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (det_sign(mid) == det_sign(lo) ? lo : hi) = mid;
    }
    double chi_mine = 0.5 * (lo + hi);
    double chi_cont = (kPi / 4.0) * (kPi / 4.0);
    CHECK(chi_mine == doctest::Approx(chi_cont).epsilon(5e-3));

    // refine against the library's own condition number, then demand a throw
    auto kappa_at = [&](double chi) {
        auto C = kernels::make_contraction(p, grid, 4.0 * chi);
        auto r = kernels::resum_resolvent(
            base, C, t_idx, std::numeric_limits<double>::infinity());
        return r.condition_number;
    };
    double a = chi_mine - 1e-4, b = chi_mine + 1e-4;
    for (int it = 0; it < 70; ++it) {
        double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (kappa_at(m1) < kappa_at(m2))
            a = m1;
        else
            b = m2;
    }
    double chi_star = 0.5 * (a + b);
    double kappa_star = kappa_at(chi_star);
    CHECK(kappa_star > 1e12);
    auto Cs = kernels::make_contraction(p, grid, 4.0 * chi_star);
    CHECK_THROWS_AS(kernels::resum_resolvent(base, Cs, t_idx), NumericalError);
    CHECK_THROWS_AS(kernels::resum_resolvent(base, Cs, t_idx, 1e12, false),
                    NumericalError);
}

TEST_CASE("two-stage recursion equals the brute-force definition (scalar)") {
    auto m = fig1_model(1.0);
    TimeGrid grid(0.3, 61);
    auto base = bath::build_correlation(m, grid);
    TlsParams p{10.0, 10.0};
    double k0_sq = 0.4, chi = k0_sq / 4.0;
    auto C = kernels::make_contraction(p, grid, k0_sq);
    int t_idx = grid.n_points - 1;

    std::vector<complexd> lvl1(t_idx + 1);
    for (int l = 0; l <= t_idx; ++l) lvl1[l] = base.value(t_idx, l);
    auto ref2 = brute_next(lvl1, base, p, chi, t_idx);
    auto got2 = kernels::next_kernel(lvl1, base, C, t_idx);
    auto ref3 = brute_next(ref2, base, p, chi, t_idx);
    auto got3 = kernels::next_kernel(got2, base, C, t_idx);

    double scale2 = 0.0, scale3 = 0.0;
    for (int l = 0; l <= t_idx; ++l) {
        scale2 = std::max(scale2, std::abs(ref2[l]));
        scale3 = std::max(scale3, std::abs(ref3[l]));
    }
    REQUIRE(scale2 > 0.0);
    REQUIRE(scale3 > 0.0);
    for (int l = 0; l <= t_idx; ++l) {
        CHECK(std::abs(got2[l] - ref2[l]) <= 1e-12 * scale2);
        CHECK(std::abs(got3[l] - ref3[l]) <= 1e-12 * scale3);
    }
}

TEST_CASE("two-stage recursion equals the brute-force definition (matrix)") {
    auto m = fig1_model(1.0);
    TimeGrid grid(0.2, 41);
    auto base = bath::build_jc_correlation_matrix(m, grid);
    double omega0 = 10.0, chi = 0.25;
    auto C = kernels::make_jc_contraction(omega0, grid, 1.0);
    int t_idx = grid.n_points - 1;

    std::array<std::vector<Eigen::RowVector2cd>, 2> lvl1;
    std::vector<Eigen::Matrix2cd> lvl1_m(t_idx + 1);
    for (int l = 0; l <= t_idx; ++l) {
        Eigen::Matrix2cd v = base.matrix_value(t_idx, l);
        lvl1_m[l] = v;
        lvl1[0].push_back(v.row(0));
        lvl1[1].push_back(v.row(1));
    }
    auto ref2 = brute_next_m(lvl1_m, base, omega0, chi, t_idx, false);
    auto got2 = kernels::next_kernel_matrix(lvl1, base, C, t_idx);
    double scale = 0.0;
    for (int l = 0; l <= t_idx; ++l)
        scale = std::max(scale, ref2[l].cwiseAbs().maxCoeff());
    REQUIRE(scale > 0.0);
    for (int l = 0; l <= t_idx; ++l) {
        Eigen::Matrix2cd g;
        g.row(0) = got2[0][l];
        g.row(1) = got2[1][l];
        CHECK((g - ref2[l]).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
}

TEST_CASE("zero-temperature rotating-frame identity holds; placement is consequential") {
    auto m = fig1_model(0.0);
    double omega0 = 10.0;
    TimeGrid grid(0.4, 61);
    auto base = bath::build_jc_correlation_matrix(m, grid);
    auto C = kernels::make_jc_contraction(omega0, grid, 1.0);
    auto btab = propagator::PropagatorTable::build_jc(omega0, grid);
    auto table = kernels::build_coefficients(base, C, btab, 1.0, 2);

    for (int order = 1; order <= 2; ++order) {
        double scale = 0.0, dev = 0.0;
        for (int k = 0; k < grid.n_points; ++k) {
            double re_xx = table.B(order, 0, k).real();
            double im_xy = table.B(order, 1, k).imag();
            scale = std::max(scale, std::abs(re_xx));
            dev = std::max(dev, std::abs(re_xx + im_xy));
        }
        REQUIRE(scale > 0.0);
        CHECK(dev <= 1e-8 * scale);
    }

    // The identity alone cannot arbitrate the index placement: at zero
    // temperature every kernel slice is proportional to P = I + sigma_y,
    // rotations act as phases on P's eigenspaces, and both placements keep
    // level two inside the P channel (transposition swaps which of the two
    // recursion terms survives, P vs its complement annihilating the other).
    // The placement is pinned instead by the definitional quadruple-loop
    // reference above; here we certify that the choice is consequential --
    // the two placements produce materially different level-two kernels --
    // and that the rejected one obeys the same channel closure.
    TimeGrid small(0.4, 41);
    auto sbase = bath::build_jc_correlation_matrix(m, small);
    int t_idx = small.n_points - 1;
    double h = small.step();
    std::vector<Eigen::Matrix2cd> lvl1(t_idx + 1);
    for (int l = 0; l <= t_idx; ++l) lvl1[l] = sbase.matrix_value(t_idx, l);
    auto good2 = brute_next_m(lvl1, sbase, omega0, 0.25, t_idx, false);
    auto bad2 = brute_next_m(lvl1, sbase, omega0, 0.25, t_idx, true);

    double scale2 = 0.0, diff2 = 0.0;
    for (int l = 0; l <= t_idx; ++l) {
        scale2 = std::max(scale2, good2[l].cwiseAbs().maxCoeff());
        diff2 = std::max(diff2, (good2[l] - bad2[l]).cwiseAbs().maxCoeff());
    }
    REQUIRE(scale2 > 0.0);
    CHECK(diff2 > 1e-3 * scale2);

    Eigen::Matrix2cd s2sum = Eigen::Matrix2cd::Zero();
    for (int l = 0; l <= t_idx; ++l) {
        Eigen::Matrix2cd s2 = lvl1[l] - bad2[l];
        s2sum += trap_weight(l, t_idx, h) * s2 *
                 propagator::jc_propagator(omega0, small.node(l) - small.node(t_idx))
                     .cast<complexd>();
    }
    Eigen::Matrix2cd bbad = 0.25 * s2sum;
    double viol = std::abs(bbad(0, 0).real() + bbad(0, 1).imag());
    CHECK(viol <= 1e-10 * std::abs(bbad(0, 0).real()));
}

TEST_CASE("coefficient tables: zero start, zero tunneling structure, status labels") {
    auto m = fig1_model(1.0);
    TimeGrid grid(0.3, 41);
    auto base = bath::build_correlation(m, grid);
    TlsParams p{0.0, 10.0};
    auto C = kernels::make_contraction(p, grid, 0.4);
    auto btab = propagator::PropagatorTable::build_tls(p, grid);
    auto table = kernels::build_coefficients(base, C, btab, 0.4, 2);

    CHECK(table.series_status == "series approximation (see Erratum)");
    CHECK(std::string(kernels::series_status_label(1)) == "TCL2-equivalent");
    CHECK(std::string(kernels::series_status_label(2)) ==
          "series approximation (see Erratum)");
    CHECK(table.active_order == 2);

    for (int order = 1; order <= 2; ++order) {
        CHECK(std::abs(table.B(order, 2, 0)) == 0.0); // B(0) = 0
        for (int k = 0; k < grid.n_points; ++k) {
            CHECK(std::abs(table.B(order, 0, k)) == 0.0); // zx vanishes
            CHECK(std::abs(table.B(order, 1, k)) == 0.0); // zy vanishes
        }
    }

    // the closed dephasing build coincides with the first-order build
    auto line = bath::correlation_line(m, grid);
    auto dtable = kernels::dephasing_coefficients(line, 0.4, grid, p);
    CHECK(dtable.series_status == "TCL2-equivalent");
    double scale = 0.0;
    for (int k = 0; k < grid.n_points; ++k)
        scale = std::max(scale, std::abs(table.B(1, 2, k)));
    for (int k = 0; k < grid.n_points; ++k)
        CHECK(std::abs(dtable.B(1, 2, k) - table.B(1, 2, k)) <= 1e-13 * scale);

    // level two is genuinely nonzero at zero tunneling: the series and the
    // bare kernel differ there, so the exact dephasing limit must be served
    // by the first-order (closed) construction rather than by higher orders.
    auto stack = kernels::build_stack(base, C, grid.n_points - 1, 2);
    double lvl1 = 0.0, lvl2 = 0.0;
    for (const auto& v : stack.levels[0]) lvl1 = std::max(lvl1, std::abs(v));
    for (const auto& v : stack.levels[1]) lvl2 = std::max(lvl2, std::abs(v));
    CHECK(lvl2 > 1e-6 * lvl1);
    MESSAGE("level-2 / level-1 magnitude at zero tunneling: ", lvl2 / lvl1);
}

TEST_CASE("single-mode closed form pins the first-order coefficient; slope 2") {
    // B(t) = chi g^2 [coth(b wc/2) sin(wc t)/wc + i (cos(wc t) - 1)/wc]
    double wc = 9.0, gsq = 0.8, T = 1.5, k0_sq = 0.4, chi = 0.1, t_max = 0.7;
    auto sm = bath::SpectralModel::single_mode(wc, gsq, T);
    TlsParams p{0.0, 4.0};
    double cth = 1.0 / std::tanh(0.5 * wc / T);
    auto exact = [&](double t) {
        return complexd(chi * gsq * cth * std::sin(wc * t) / wc,
                        chi * gsq * (std::cos(wc * t) - 1.0) / wc);
    };
    std::vector<double> hs, errs;
    for (int n : {51, 101, 201, 401}) {
        TimeGrid g(t_max, n);
        auto base = bath::build_correlation(sm, g);
        auto C = kernels::make_contraction(p, g, k0_sq);
        auto btab = propagator::PropagatorTable::build_tls(p, g);
        auto table = kernels::build_coefficients(base, C, btab, k0_sq, 1);
        double err = std::abs(table.B(1, 2, n - 1) - exact(t_max));
        hs.push_back(g.step());
        errs.push_back(err);
    }
    double slope = std::log(errs.front() / errs.back()) /
                   std::log(hs.front() / hs.back());
    CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
    CHECK(errs.back() < 5e-4);
}

TEST_CASE("weak coupling: resolvent and third-order truncation coincide") {
    auto m = fig1_model(1.0);
    TimeGrid grid(0.3, 61);
    auto base = bath::build_correlation(m, grid);
    TlsParams p{10.0, 10.0};
    auto C = kernels::make_contraction(p, grid, 1e-3);
    double scale = base.max_abs();
    for (int t_idx : {20, 40, 60}) {
        auto stack = kernels::build_stack(base, C, t_idx, 3);
        auto trunc = kernels::resum_truncated(stack, 3).back();
        auto res = kernels::resum_resolvent(base, C, t_idx, 1e12, false);
        for (int l = 0; l <= t_idx; ++l)
            CHECK(std::abs(trunc.scalar[l] - res.slice.scalar[l]) <=
                  1e-6 * scale);
    }
}

TEST_CASE("serial and parallel builds agree bit for bit") {
    auto m = fig1_model(1.0);
    TimeGrid grid(0.3, 41);
    auto base = bath::build_correlation(m, grid);
    TlsParams p{10.0, 10.0};
    auto C = kernels::make_contraction(p, grid, 0.4);
    auto btab = propagator::PropagatorTable::build_tls(p, grid);
    auto a = kernels::build_coefficients(base, C, btab, 0.4, 3,
                                         kernels::ResumMethod::Truncated,
                                         kernels::ExecPolicy::Serial);
    auto b = kernels::build_coefficients(base, C, btab, 0.4, 3,
                                         kernels::ResumMethod::Truncated,
                                         kernels::ExecPolicy::Parallel);
    for (int order = 1; order <= 3; ++order)
        for (int comp = 0; comp < 3; ++comp)
            for (int k = 0; k < grid.n_points; ++k)
                CHECK(a.B(order, comp, k) == b.B(order, comp, k));
}

TEST_CASE("coefficient interpolation is linear and domain-checked") {
    auto m = fig1_model(1.0);
    TimeGrid grid(0.3, 31);
    auto base = bath::build_correlation(m, grid);
    TlsParams p{10.0, 10.0};
    auto C = kernels::make_contraction(p, grid, 0.4);
    auto btab = propagator::PropagatorTable::build_tls(p, grid);
    auto table = kernels::build_coefficients(base, C, btab, 0.4, 1);
    double h = grid.step();
    complexd mid = table.B_interp(2, 3.25 * h);
    complexd want = 0.75 * table.B(1, 2, 3) + 0.25 * table.B(1, 2, 4);
    CHECK(std::abs(mid - want) < 1e-13);
    CHECK(table.B_interp(2, 0.0) == table.B(1, 2, 0));
    CHECK(table.B_interp(2, 0.3) == table.B(1, 2, 30));
    CHECK_THROWS_AS(table.B_interp(2, 0.3 + 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(table.B_interp(2, -1e-9), std::invalid_argument);
}

} // TEST_SUITE("kernels")
