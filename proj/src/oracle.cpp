#include "qmek/oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qmek/errors.hpp"

namespace qmek::oracle {

namespace {

constexpr double kTailTol = 1e-8;
constexpr long long kTotalDimBudget = 4096; // TLS factor of 2 included

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

Eigen::MatrixXcd lowering(int cutoff) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

// op acting on mode j, identity on every other mode
Eigen::MatrixXcd lift(const DiscreteBathSpec& bath, size_t j,
                      const Eigen::MatrixXcd& op) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (size_t k = 0; k < bath.modes.size(); ++k) {
        const int c = bath.modes[k].fock_cutoff;
        out = kron(out, k == j ? op : Eigen::MatrixXcd::Identity(c, c));
    }
    return out;
}

Eigen::MatrixXcd bath_hamiltonian(const DiscreteBathSpec& bath) {
    const int d = bath.bath_dimension();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    for (size_t j = 0; j < bath.modes.size(); ++j) {
        const Eigen::MatrixXcd a = lowering(bath.modes[j].fock_cutoff);
        h += bath.modes[j].omega * lift(bath, j, a.adjoint() * a);
    }
    return h;
}

// sum_j sqrt(g_sq_j) (a_j + a_j^dag)
Eigen::MatrixXcd coupling_x(const DiscreteBathSpec& bath) {
    const int d = bath.bath_dimension();
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(d, d);
    for (size_t j = 0; j < bath.modes.size(); ++j) {
        const Eigen::MatrixXcd a = lowering(bath.modes[j].fock_cutoff);
        phi += std::sqrt(bath.modes[j].g_sq) *
               lift(bath, j, Eigen::MatrixXcd(a + a.adjoint()));
    }
    return phi;
}

// sum_j sqrt(g_sq_j) i (a_j - a_j^dag); the quadrature conjugate to coupling_x
Eigen::MatrixXcd coupling_y(const DiscreteBathSpec& bath) {
    const int d = bath.bath_dimension();
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(d, d);
    const complexd iu(0.0, 1.0);
    for (size_t j = 0; j < bath.modes.size(); ++j) {
        const Eigen::MatrixXcd a = lowering(bath.modes[j].fock_cutoff);
        phi += std::sqrt(bath.modes[j].g_sq) *
               lift(bath, j, Eigen::MatrixXcd(iu * (a - a.adjoint())));
    }
    return phi;
}

Eigen::MatrixXcd pauli_x() {
    Eigen::MatrixXcd s(2, 2);
    s << 0.0, 1.0, 1.0, 0.0;
    return s;
}

Eigen::MatrixXcd pauli_z() {
    Eigen::MatrixXcd s(2, 2);
    s << 1.0, 0.0, 0.0, -1.0;
    return s;
}

// energy of product Fock state |b> under sum_j omega_j n_j, kron ordering
double fock_energy(const DiscreteBathSpec& bath, int b) {
    double e = 0.0;
    for (size_t j = bath.modes.size(); j-- > 0;) {
        const int c = bath.modes[j].fock_cutoff;
        e += bath.modes[j].omega * double(b % c);
        b /= c;
    }
    return e;
}

} // namespace

void DiscreteBathSpec::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw std::invalid_argument("bath temperature must be finite and >= 0");
    long long dim = 2; // TLS factor
    for (const Mode& m : modes) {
        if (!(m.omega > 0.0) || !std::isfinite(m.omega))
            throw std::invalid_argument("mode frequency must be finite and > 0");
        if (!(m.g_sq >= 0.0) || !std::isfinite(m.g_sq))
            throw std::invalid_argument("mode weight must be finite and >= 0");
        if (m.fock_cutoff < 2)
            throw std::invalid_argument("mode needs at least two Fock levels");
        dim *= m.fock_cutoff;
        if (dim > kTotalDimBudget)
            throw std::invalid_argument(
                "total composite dimension exceeds the 4096 budget");
    }
}

int DiscreteBathSpec::bath_dimension() const {
    int d = 1;
    for (const Mode& m : modes) d *= m.fock_cutoff;
    return d;
}

Eigen::MatrixXcd build_hamiltonian(const DiscreteBathSpec& bath,
                                   const SpinBosonModel& m) {
    bath.validate();
    const int d = bath.bath_dimension();
    const Eigen::MatrixXcd ib = Eigen::MatrixXcd::Identity(d, d);
    const Eigen::MatrixXcd i2 = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd hs = -0.5 * m.delta * pauli_x() + 0.5 * m.epsilon * pauli_z();
    return kron(hs, ib) + kron(i2, bath_hamiltonian(bath)) +
           (0.5 * m.k0) * kron(pauli_z(), coupling_x(bath));
}

Eigen::MatrixXcd build_hamiltonian(const DiscreteBathSpec& bath,
                                   const RabiModel& m) {
    bath.validate();
    const int d = bath.bath_dimension();
    const Eigen::MatrixXcd ib = Eigen::MatrixXcd::Identity(d, d);
    const Eigen::MatrixXcd i2 = Eigen::MatrixXcd::Identity(2, 2);
    return kron(0.5 * m.omega0 * pauli_z(), ib) +
           kron(i2, bath_hamiltonian(bath)) + kron(pauli_x(), coupling_x(bath));
}

Eigen::MatrixXcd build_hamiltonian(const DiscreteBathSpec& bath,
                                   const JaynesCummingsModel& m) {
    bath.validate();
    const int d = bath.bath_dimension();
    const Eigen::MatrixXcd ib = Eigen::MatrixXcd::Identity(d, d);
    const Eigen::MatrixXcd i2 = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd sp(2, 2), sm(2, 2);
    sp << 0.0, 1.0, 0.0, 0.0; // |excited><ground|
    sm << 0.0, 0.0, 1.0, 0.0;
    Eigen::MatrixXcd h =
        kron(0.5 * m.omega0 * pauli_z(), ib) + kron(i2, bath_hamiltonian(bath));
    for (size_t j = 0; j < bath.modes.size(); ++j) {
        const Eigen::MatrixXcd a = lowering(bath.modes[j].fock_cutoff);
        const double g = std::sqrt(bath.modes[j].g_sq);
        h += g * kron(sp, lift(bath, j, a));
        h += g * kron(sm, lift(bath, j, Eigen::MatrixXcd(a.adjoint())));
    }
    return h;
}

DiscreteBathSpec ensure_thermal_cutoffs(DiscreteBathSpec bath, double tail_tol) {
    bath.validate();
    if (bath.temperature > 0.0) {
        const double log_inv = std::log(1.0 / tail_tol);
        for (Mode& m : bath.modes) {
            const double needed = log_inv * bath.temperature / m.omega;
            int c = m.fock_cutoff;
            if (needed > 1e9) {
                std::ostringstream msg;
                msg << "mode at frequency " << m.omega << " needs ~" << needed
                    << " Fock levels at temperature " << bath.temperature;
                throw NumericalError("oracle", msg.str());
            }
            c = std::max(c, int(std::ceil(needed)));
            while (std::exp(-m.omega * c / bath.temperature) > tail_tol) ++c;
            m.fock_cutoff = c;
        }
    }
    long long dim = 2;
    for (const Mode& m : bath.modes) {
        dim *= m.fock_cutoff;
        if (dim > kTotalDimBudget) {
            std::ostringstream msg;
            msg << "resolving the thermal tails below " << tail_tol
                << " needs a composite dimension beyond the budget of "
                << kTotalDimBudget;
            throw NumericalError("oracle", msg.str());
        }
    }
    return bath;
}

Eigen::MatrixXcd thermal_state(const DiscreteBathSpec& bath) {
    bath.validate();
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(1, 1);
    for (const Mode& m : bath.modes) {
        const int c = m.fock_cutoff;
        Eigen::VectorXd p = Eigen::VectorXd::Zero(c);
        if (bath.temperature == 0.0) {
            p(0) = 1.0;
        } else {
            const double tail = std::exp(-m.omega * c / bath.temperature);
            if (tail > kTailTol) {
                std::ostringstream msg;
                msg << "thermal occupation tail " << tail << " at cutoff " << c
                    << " for mode frequency " << m.omega
                    << " exceeds the tolerance " << kTailTol
                    << "; raise the cutoff (ensure_thermal_cutoffs)";
                throw NumericalError("oracle", msg.str());
            }
            const double x = std::exp(-m.omega / bath.temperature);
            const double norm = (1.0 - x) / (1.0 - std::pow(x, c));
            double xn = 1.0;
            for (int n = 0; n < c; ++n, xn *= x) p(n) = norm * xn;
        }
        rho = kron(rho, Eigen::MatrixXcd(p.cast<complexd>().asDiagonal()));
    }
    return rho;
}

Eigen::MatrixXcd product_state(const dynamics::Qubit2x2& rho_tls,
                               const DiscreteBathSpec& bath) {
    return kron(rho_tls, thermal_state(bath));
}

OracleTrajectory evolve_exact(const Eigen::MatrixXcd& H,
                              const Eigen::MatrixXcd& rho_total0,
                              const TimeGrid& grid) {
    if (H.rows() != H.cols() || H.rows() != rho_total0.rows() ||
        H.rows() != rho_total0.cols() || H.rows() % 2 != 0)
        throw std::invalid_argument(
            "Hamiltonian and initial state must be square, matching, and of "
            "even dimension");
    const int big = int(H.rows());
    const int db = big / 2;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    if (es.info() != Eigen::Success)
        throw NumericalError("oracle", "eigendecomposition failed to converge");
    const Eigen::MatrixXcd& v = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();
    const Eigen::MatrixXcd w = v.adjoint() * rho_total0 * v;

    OracleTrajectory traj;
    traj.t.reserve(grid.n_points);
    traj.rho.reserve(grid.n_points);
    traj.min_eigenvalue = std::numeric_limits<double>::infinity();
    const double trace0 = rho_total0.trace().real();

    Eigen::VectorXcd phase(big);
    Eigen::MatrixXcd m(big, big);
    for (int k = 0; k < grid.n_points; ++k) {
        const double t = grid.node(k);
        for (int i = 0; i < big; ++i)
            phase(i) = std::exp(complexd(0.0, -e(i) * t));
        for (int i = 0; i < big; ++i)
            for (int j = 0; j < big; ++j)
                m(i, j) = phase(i) * w(i, j) * std::conj(phase(j));
        const Eigen::MatrixXcd full = v * m * v.adjoint();

        dynamics::Qubit2x2 red = dynamics::Qubit2x2::Zero();
        for (int s = 0; s < 2; ++s)
            for (int sp = 0; sp < 2; ++sp)
                for (int b = 0; b < db; ++b)
                    red(s, sp) += full(s * db + b, sp * db + b);

        traj.t.push_back(t);
        traj.rho.push_back(red);
        traj.max_trace_dev =
            std::max(traj.max_trace_dev, std::abs(red.trace().real() - trace0));
        Eigen::SelfAdjointEigenSolver<dynamics::Qubit2x2> red_es(red);
        traj.min_eigenvalue =
            std::min(traj.min_eigenvalue, red_es.eigenvalues().minCoeff());
    }
    return traj;
}

CertifyReport certify_correlation(const DiscreteBathSpec& bath,
                                  const TimeGrid& grid, double tol) {
    bath.validate();
    const int d = bath.bath_dimension();
    const Eigen::MatrixXcd rho = thermal_state(bath);
    const Eigen::MatrixXcd phix = coupling_x(bath);
    const Eigen::MatrixXcd phiy = coupling_y(bath);

    Eigen::VectorXd energy(d);
    for (int b = 0; b < d; ++b) energy(b) = fock_energy(bath, b);

    std::vector<std::pair<double, double>> modes;
    modes.reserve(bath.modes.size());
    for (const Mode& m : bath.modes) modes.emplace_back(m.omega, m.g_sq);

    CertifyReport rep;
    const std::array<const Eigen::MatrixXcd*, 2> phi = {&phix, &phiy};
    for (int k = 0; k < grid.n_points; ++k) {
        const double t = grid.node(k);
        // <phi_i(t) phi_j(0)> over the diagonal thermal ensemble
        Eigen::Matrix2cd heis = Eigen::Matrix2cd::Zero();
        for (int mm = 0; mm < d; ++mm) {
            const double pm = rho(mm, mm).real();
            if (pm == 0.0) continue;
            for (int nn = 0; nn < d; ++nn) {
                const complexd osc =
                    std::exp(complexd(0.0, (energy(mm) - energy(nn)) * t));
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        heis(i, j) += pm * osc * (*phi[i])(mm, nn) *
                                      (*phi[j])(nn, mm);
            }
        }
        const Eigen::Matrix2cd want =
            bath::discrete_jc_correlation(modes, bath.temperature, t);
        const complexd want_scalar =
            bath::discrete_correlation(modes, bath.temperature, t);
        rep.max_abs_dev = std::max(
            {rep.max_abs_dev, (heis - want).cwiseAbs().maxCoeff(),
             std::abs(heis(0, 0) - want_scalar)});
        rep.scale = std::max(rep.scale, want.cwiseAbs().maxCoeff());
    }
    rep.passed = rep.scale > 0.0 && rep.max_abs_dev <= tol * rep.scale;
    return rep;
}

CompareReport compare(const std::vector<dynamics::Qubit2x2>& me,
                      const OracleTrajectory& oracle) {
    if (me.size() != oracle.rho.size())
        throw std::invalid_argument("trajectories have different lengths");
    CompareReport rep;
    rep.trace_distance.reserve(me.size());
    for (size_t k = 0; k < me.size(); ++k) {
        const dynamics::Qubit2x2 diff = me[k] - oracle.rho[k];
        Eigen::SelfAdjointEigenSolver<dynamics::Qubit2x2> es(diff);
        const double dist = 0.5 * es.eigenvalues().cwiseAbs().sum();
        rep.trace_distance.push_back(dist);
        if (dist > rep.max_trace_distance) {
            rep.max_trace_distance = dist;
            rep.argmax_index = int(k);
        }
    }
    return rep;
}

} // namespace qmek::oracle
