#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qmek/bath.hpp"
#include "qmek/errors.hpp"
#include "qmek/oracle.hpp"

using namespace qmek;
using bath::complexd;
using dynamics::Qubit2x2;
using oracle::DiscreteBathSpec;
using oracle::Mode;

namespace {

std::vector<double> spectrum(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    std::vector<double> e(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(e.begin(), e.end());
    return e;
}

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("bath spec validation and dimension budget") {
    DiscreteBathSpec ok{{Mode{5.0, 0.1, 8}}, 0.0};
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.bath_dimension() == 8);

    DiscreteBathSpec toobig{{Mode{5.0, 0.1, 64}, Mode{6.0, 0.1, 64}}, 0.0};
    CHECK_THROWS_AS(toobig.validate(), std::invalid_argument);

    DiscreteBathSpec negw{{Mode{-1.0, 0.1, 8}}, 0.0};
    CHECK_THROWS_AS(negw.validate(), std::invalid_argument);
    DiscreteBathSpec negg{{Mode{1.0, -0.1, 8}}, 0.0};
    CHECK_THROWS_AS(negg.validate(), std::invalid_argument);
    DiscreteBathSpec negt{{Mode{1.0, 0.1, 8}}, -1.0};
    CHECK_THROWS_AS(negt.validate(), std::invalid_argument);
    DiscreteBathSpec shallow{{Mode{1.0, 0.1, 1}}, 0.0};
    CHECK_THROWS_AS(shallow.validate(), std::invalid_argument);
}

TEST_CASE("Hamiltonians are Hermitian and reduce correctly at zero coupling") {
    DiscreteBathSpec bspec{{Mode{5.0, 0.0, 3}}, 0.0};
    Eigen::MatrixXcd h =
        oracle::build_hamiltonian(bspec, oracle::JaynesCummingsModel{3.0});
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
    auto e = spectrum(h);
    std::vector<double> want{-1.5, 1.5, 3.5, 6.5, 8.5, 11.5};
    REQUIRE(e.size() == want.size());
    for (size_t i = 0; i < e.size(); ++i)
        CHECK(e[i] == doctest::Approx(want[i]).epsilon(1e-12));

    DiscreteBathSpec bsb{{Mode{2.0, 0.3, 5}}, 0.0};
    Eigen::MatrixXcd hsb =
        oracle::build_hamiltonian(bsb, oracle::SpinBosonModel{10.0, 10.0, 2.0});
    CHECK((hsb - hsb.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
    Eigen::MatrixXcd hr =
        oracle::build_hamiltonian(bsb, oracle::RabiModel{4.0});
    CHECK((hr - hr.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("vacuum splitting: exact 2g in the rotating-wave model, near 2g without") {
    double w = 5.0, g = 0.2;
    DiscreteBathSpec bspec{{Mode{w, g * g, 6}}, 0.0};
    auto e = spectrum(oracle::build_hamiltonian(bspec, oracle::JaynesCummingsModel{w}));
    // first excitation manifold sits at w/2 -+ g
    std::vector<double> near;
    for (double x : e)
        if (std::abs(x - 0.5 * w) < 1.0) near.push_back(x);
    REQUIRE(near.size() == 2);
    CHECK(near[1] - near[0] == doctest::Approx(2.0 * g).epsilon(1e-10));

    double gr = 0.05;
    DiscreteBathSpec brabi{{Mode{w, gr * gr, 8}}, 0.0};
    auto er = spectrum(oracle::build_hamiltonian(brabi, oracle::RabiModel{w}));
    std::vector<double> rnear;
    for (double x : er)
        if (std::abs(x - 0.5 * w) < 0.5) rnear.push_back(x);
    REQUIRE(rnear.size() == 2);
    CHECK(std::abs((rnear[1] - rnear[0]) - 2.0 * gr) < 0.02 * 2.0 * gr);
}

TEST_CASE("thermal state: vacuum limit, occupation, truncation guard") {
    DiscreteBathSpec cold{{Mode{1.0, 0.1, 8}}, 0.0};
    Eigen::MatrixXcd rho = oracle::thermal_state(cold);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-12);
    CHECK(std::abs(rho(0, 0) - complexd(1.0, 0.0)) < 1e-14);

    DiscreteBathSpec warm{{Mode{1.0, 0.1, 8}}, 1.0};
    CHECK_THROWS_AS(oracle::thermal_state(warm), NumericalError);

    auto fixed = oracle::ensure_thermal_cutoffs(warm);
    CHECK(fixed.modes[0].fock_cutoff >= 19);
    Eigen::MatrixXcd rt = oracle::thermal_state(fixed);
    CHECK(std::abs(rt.trace().real() - 1.0) < 1e-12);
    double occ = 0.0;
    for (int n = 0; n < fixed.modes[0].fock_cutoff; ++n)
        occ += n * rt(n, n).real();
    CHECK(occ == doctest::Approx(0.5819767068693265).epsilon(1e-4));

    // an impossible budget refuses instead of silently truncating
    DiscreteBathSpec hot{{Mode{0.001, 0.1, 8}}, 10.0};
    CHECK_THROWS_AS(oracle::ensure_thermal_cutoffs(hot), NumericalError);
}

TEST_CASE("exact evolution: free limit matches the analytic propagator") {
    DiscreteBathSpec bspec{{Mode{5.0, 0.7, 4}}, 0.0};
    oracle::SpinBosonModel m{10.0, 10.0, 0.0}; // k0 = 0 decouples the bath
    Eigen::MatrixXcd h = oracle::build_hamiltonian(bspec, m);
    dynamics::BlochVector v0{0.3, -0.2, 0.8};
    Eigen::MatrixXcd rho0 =
        oracle::product_state(dynamics::rho_from_bloch(v0), bspec);
    TimeGrid grid(0.5, 26);
    auto traj = oracle::evolve_exact(h, rho0, grid);
    CHECK(traj.max_trace_dev < 1e-12);
    CHECK(traj.min_eigenvalue > -1e-9);
    propagator::TlsParams p{m.delta, m.epsilon};
    for (int k = 0; k < grid.n_points; ++k) {
        dynamics::BlochVector want =
            propagator::tls_propagator(p, grid.node(k)) * v0;
        dynamics::BlochVector got = dynamics::bloch_from_rho(traj.rho[k]);
        CHECK((got - want).norm() < 1e-10);
    }
}

TEST_CASE("exact evolution: vacuum Rabi oscillation in the rotating-wave model") {
    double w = 5.0, g = 0.3;
    DiscreteBathSpec bspec{{Mode{w, g * g, 6}}, 0.0};
    Eigen::MatrixXcd h =
        oracle::build_hamiltonian(bspec, oracle::JaynesCummingsModel{w});
    Qubit2x2 up;
    up << 1.0, 0.0, 0.0, 0.0;
    Eigen::MatrixXcd rho0 = oracle::product_state(up, bspec);
    double pi = 3.14159265358979323846;
    TimeGrid grid(pi / g, 3); // nodes at g t = 0, pi/2, pi
    auto traj = oracle::evolve_exact(h, rho0, grid);
    CHECK(traj.max_trace_dev < 1e-12);
    for (int k = 0; k < grid.n_points; ++k) {
        double want = std::cos(g * grid.node(k)) * std::cos(g * grid.node(k));
        CHECK(traj.rho[k](0, 0).real() == doctest::Approx(want).epsilon(1e-8));
        // the excitation swaps coherently: the reduced state stays pure here
        double purity = (traj.rho[k] * traj.rho[k]).trace().real();
        CHECK(purity == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("correlation certification against the Heisenberg route") {
    DiscreteBathSpec one{{Mode{3.0, 0.7, 8}}, 0.5};
    TimeGrid grid(2.0, 41);
    auto rep = oracle::certify_correlation(one, grid);
    CHECK(rep.passed);
    CHECK(rep.scale > 0.0);
    CHECK(rep.max_abs_dev <= 1e-8 * rep.scale);

    DiscreteBathSpec two{{Mode{3.0, 0.7, 8}, Mode{5.0, 0.3, 8}}, 0.5};
    auto rep2 = oracle::certify_correlation(two, grid);
    CHECK(rep2.passed);

    // the analytic sum over modes it certifies:
    complexd d = bath::discrete_correlation({{3.0, 0.7}, {5.0, 0.3}}, 0.5, 0.4);
    complexd d1 = bath::discrete_correlation({{3.0, 0.7}}, 0.5, 0.4);
    complexd d2 = bath::discrete_correlation({{5.0, 0.3}}, 0.5, 0.4);
    CHECK(std::abs(d - (d1 + d2)) < 1e-14);
}

TEST_CASE("trajectory comparison measures trace distance") {
    DiscreteBathSpec bspec{{Mode{5.0, 0.09, 6}}, 0.0};
    Eigen::MatrixXcd h =
        oracle::build_hamiltonian(bspec, oracle::JaynesCummingsModel{5.0});
    Qubit2x2 up;
    up << 1.0, 0.0, 0.0, 0.0;
    TimeGrid grid(1.0, 11);
    auto traj = oracle::evolve_exact(h, oracle::product_state(up, bspec), grid);

    auto rep = oracle::compare(traj.rho, traj);
    CHECK(rep.max_trace_distance == doctest::Approx(0.0));

    auto shifted = traj.rho;
    shifted[5](0, 0) += 0.1;
    shifted[5](1, 1) -= 0.1;
    auto rep2 = oracle::compare(shifted, traj);
    CHECK(rep2.max_trace_distance == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(rep2.argmax_index == 5);
}

} // TEST_SUITE("oracle")
