#include "qmek/propagator.hpp"

namespace qmek::propagator {

Eigen::Matrix3d tls_propagator(const TlsParams& p, double u) {
    const double w = p.omega();
    if (w == 0.0) return Eigen::Matrix3d::Identity();

    const double c = std::cos(w * u);
    const double s = std::sin(w * u);
    const double dw = p.delta / w;   // axis components: n = (-dw, 0, ew)
    const double ew = p.epsilon / w;

    // Rodrigues form b = c I + s [n]_x + (1 - c) n n^T; written out so the
    // delta = 0 and epsilon = 0 degenerate entries vanish exactly.
    Eigen::Matrix3d b;
    b(0, 0) = c + (1.0 - c) * dw * dw;
    b(0, 1) = -s * ew;
    b(0, 2) = -(1.0 - c) * dw * ew;
    b(1, 0) = s * ew;
    b(1, 1) = c;
    b(1, 2) = s * dw;
    b(2, 0) = -(1.0 - c) * dw * ew;
    b(2, 1) = -s * dw;
    b(2, 2) = 1.0 + dw * dw * (c - 1.0);
    return b;
}

double tls_bzz(const TlsParams& p, double u) {
    const double w = p.omega();
    if (w == 0.0) return 1.0;
    const double dw = p.delta / w;
    return 1.0 + dw * dw * (std::cos(w * u) - 1.0);
}

double contraction(const TlsParams& p, double s1, double s2, double t_ref) {
    const double gate = theta(s2 - s1);
    if (gate == 0.0) return 0.0;
    // literal row-z pairing relative to t_ref; collapses to b_z^z(s1 - s2)
    const Eigen::Matrix3d b1 = tls_propagator(p, s1 - t_ref);
    const Eigen::Matrix3d b2 = tls_propagator(p, s2 - t_ref);
    const double dot = b1.row(2).dot(b2.row(2));
    return -2.0 * dot * gate;
}

Eigen::Matrix2d jc_propagator(double omega0, double u) {
    const double c = std::cos(omega0 * u);
    const double s = std::sin(omega0 * u);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
}

Eigen::Matrix2d jc_contraction_matrix(double omega0, double s1, double s2) {
    const double gate = theta(s2 - s1);
    if (gate == 0.0) return Eigen::Matrix2d::Zero();
    return (-2.0 * gate) * jc_propagator(omega0, s1 - s2);
}

PropagatorTable PropagatorTable::build_tls(const TlsParams& p,
                                           const TimeGrid& grid) {
    PropagatorTable t;
    t.grid = grid;
    t.jc = false;
    t.tls = p;
    t.b_minus.resize(grid.n_points);
    t.bzz_line.resize(grid.n_points);
    for (int j = 0; j < grid.n_points; ++j) {
        t.b_minus[j] = tls_propagator(p, -grid.node(j));
        t.bzz_line[j] = tls_bzz(p, grid.node(j));
    }
    return t;
}

PropagatorTable PropagatorTable::build_jc(double omega0, const TimeGrid& grid) {
    PropagatorTable t;
    t.grid = grid;
    t.jc = true;
    t.omega0 = omega0;
    t.r_minus.resize(grid.n_points);
    for (int j = 0; j < grid.n_points; ++j)
        t.r_minus[j] = jc_propagator(omega0, -grid.node(j));
    return t;
}

} // namespace qmek::propagator
