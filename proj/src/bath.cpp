#include "qmek/bath.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qmek/quadrature.hpp"

namespace qmek::bath {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Frequency beyond which the integrand is negligible for the given family.
double upper_frequency(const SpectralModel& m) {
    switch (m.family) {
    case SpectralFamily::OhmicGaussianCutoff:
        return 8.0 * m.cutoff_lambda;
    case SpectralFamily::Tabulated:
        return m.samples.back().first;
    case SpectralFamily::SingleMode:
        break; // analytic path, no quadrature
    }
    throw std::logic_error("no quadrature cutoff for this spectral family");
}

// J(w) coth(w / 2T); reduces to J(w) at T = 0. For the ohmic family the
// removable w -> 0 limit is taken analytically: J coth -> 2 a T e^{-w^2/L^2}.
double thermal_weight(const SpectralModel& m, double w) {
    if (m.temperature == 0.0) return eval_spectral_density(m, w);
    if (m.family == SpectralFamily::OhmicGaussianCutoff &&
        w < 1e-6 * m.cutoff_lambda) {
        double x = w / m.cutoff_lambda;
        return 2.0 * m.prefactor_a * m.temperature * std::exp(-x * x);
    }
    return eval_spectral_density(m, w) / std::tanh(0.5 * w / m.temperature);
}

double coth_of(double omega, double temperature) {
    if (temperature == 0.0) return 1.0;
    return 1.0 / std::tanh(0.5 * omega / temperature);
}

Eigen::Matrix2cd single_mode_matrix(double omega, double g_sq, double coth,
                                    double tau) {
    const double c = std::cos(omega * tau);
    const double s = std::sin(omega * tau);
    Eigen::Matrix2cd d;
    d(0, 0) = g_sq * complexd(coth * c, -s);
    d(0, 1) = -g_sq * complexd(coth * s, c);
    d(1, 0) = -d(0, 1);
    d(1, 1) = d(0, 0);
    return d;
}

// tau = 0 magnitude of the kernel (integral of J coth): positive integrand,
// well conditioned. It sets the absolute scale against which the oscillatory
// lag integrals cancel; a pure relative goal becomes roundoff-unreachable
// once they shrink to ~1e-6 of it, so the lag quadratures carry an absolute
// floor three decades below rel_tol times this moment.
constexpr double kFloorFraction = 1e-3;

double thermal_moment(const SpectralModel& m, double rel_tol) {
    const double wmax = upper_frequency(m);
    return quadrature::integrate(
               [&](double w) { return thermal_weight(m, w); }, 0.0, wmax,
               std::max(rel_tol, 1e-8))
        .value;
}

complexd correlation_value_floored(const SpectralModel& m, double tau,
                                   double rel_tol, double abs_floor) {
    const double wmax = upper_frequency(m);
    auto re = quadrature::integrate(
        [&](double w) { return thermal_weight(m, w) * std::cos(w * tau); }, 0.0,
        wmax, rel_tol, abs_floor);
    auto im = quadrature::integrate(
        [&](double w) { return eval_spectral_density(m, w) * std::sin(w * tau); },
        0.0, wmax, rel_tol, abs_floor);
    return {re.value, -im.value};
}

Eigen::Matrix2cd jc_correlation_value_floored(const SpectralModel& m, double tau,
                                              double rel_tol, double abs_floor) {
    // Four independent quadratures; no entry is derived from another, so the
    // zero-temperature lock D_xy = -i D_xx stays a measurable property.
    const double wmax = upper_frequency(m);
    auto q = [&](const std::function<double(double)>& f) {
        return quadrature::integrate(f, 0.0, wmax, rel_tol, abs_floor).value;
    };
    const double re_xx =
        q([&](double w) { return thermal_weight(m, w) * std::cos(w * tau); });
    const double im_xx =
        -q([&](double w) { return eval_spectral_density(m, w) * std::sin(w * tau); });
    const double re_xy =
        -q([&](double w) { return thermal_weight(m, w) * std::sin(w * tau); });
    const double im_xy =
        -q([&](double w) { return eval_spectral_density(m, w) * std::cos(w * tau); });

    Eigen::Matrix2cd d;
    d(0, 0) = complexd(re_xx, im_xx);
    d(0, 1) = complexd(re_xy, im_xy);
    d(1, 0) = -d(0, 1);
    d(1, 1) = d(0, 0);
    return d;
}

} // namespace

// ---- SpectralModel ----

SpectralModel SpectralModel::ohmic_gaussian(double a, double lambda, double T) {
    SpectralModel m;
    m.family = SpectralFamily::OhmicGaussianCutoff;
    m.prefactor_a = a;
    m.cutoff_lambda = lambda;
    m.temperature = T;
    return m;
}

SpectralModel SpectralModel::single_mode(double omega_c, double g_sq, double T) {
    SpectralModel m;
    m.family = SpectralFamily::SingleMode;
    m.mode_frequency = omega_c;
    m.mode_weight = g_sq;
    m.temperature = T;
    return m;
}

SpectralModel SpectralModel::tabulated(
    std::vector<std::pair<double, double>> samples, double T) {
    SpectralModel m;
    m.family = SpectralFamily::Tabulated;
    m.samples = std::move(samples);
    m.temperature = T;
    return m;
}

void SpectralModel::validate() const {
    if (!std::isfinite(temperature) || temperature < 0.0)
        throw std::invalid_argument("temperature must be finite and >= 0");
    switch (family) {
    case SpectralFamily::OhmicGaussianCutoff:
        if (!std::isfinite(prefactor_a) || prefactor_a < 0.0)
            throw std::invalid_argument("ohmic prefactor must be finite and >= 0");
        if (!std::isfinite(cutoff_lambda) || cutoff_lambda <= 0.0)
            throw std::invalid_argument("cutoff frequency must be finite and > 0");
        return;
    case SpectralFamily::SingleMode:
        if (!std::isfinite(mode_frequency) || mode_frequency <= 0.0)
            throw std::invalid_argument("mode frequency must be finite and > 0");
        if (!std::isfinite(mode_weight) || mode_weight < 0.0)
            throw std::invalid_argument("mode weight must be finite and >= 0");
        if (!(delta_width_fraction > 0.0) || delta_width_fraction > 0.1)
            throw std::invalid_argument("delta width fraction must lie in (0, 0.1]");
        return;
    case SpectralFamily::Tabulated:
        if (samples.empty())
            throw std::invalid_argument("tabulated spectral density needs samples");
        for (size_t i = 0; i < samples.size(); ++i) {
            const auto& [w, j] = samples[i];
            if (!std::isfinite(w) || w < 0.0 || !std::isfinite(j) || j < 0.0)
                throw std::invalid_argument(
                    "tabulated samples must have finite w >= 0 and J >= 0");
            if (i > 0 && w <= samples[i - 1].first)
                throw std::invalid_argument(
                    "tabulated frequencies must be strictly increasing");
        }
        return;
    }
    throw std::invalid_argument("unknown spectral family");
}

double eval_spectral_density(const SpectralModel& m, double omega) {
    if (omega < 0.0)
        throw std::invalid_argument("spectral density queried at negative frequency");
    switch (m.family) {
    case SpectralFamily::OhmicGaussianCutoff: {
        const double x = omega / m.cutoff_lambda;
        return m.prefactor_a * omega * std::exp(-x * x);
    }
    case SpectralFamily::SingleMode: {
        const double width = m.delta_width_fraction * m.mode_frequency;
        const double z = (omega - m.mode_frequency) / width;
        return m.mode_weight / (width * std::sqrt(2.0 * kPi)) *
               std::exp(-0.5 * z * z);
    }
    case SpectralFamily::Tabulated: {
        if (m.samples.empty()) return 0.0;
        if (omega < m.samples.front().first || omega > m.samples.back().first)
            return 0.0;
        auto it = std::lower_bound(
            m.samples.begin(), m.samples.end(), omega,
            [](const std::pair<double, double>& s, double w) { return s.first < w; });
        if (it == m.samples.begin()) return it->second;
        auto lo = std::prev(it);
        const double t = (omega - lo->first) / (it->first - lo->first);
        return lo->second + t * (it->second - lo->second);
    }
    }
    throw std::invalid_argument("unknown spectral family");
}

// ---- pointwise correlations ----

complexd correlation_value(const SpectralModel& m, double tau, double rel_tol) {
    m.validate();
    if (m.family == SpectralFamily::SingleMode) {
        const double cth = coth_of(m.mode_frequency, m.temperature);
        return m.mode_weight * complexd(cth * std::cos(m.mode_frequency * tau),
                                        -std::sin(m.mode_frequency * tau));
    }
    const double floor = kFloorFraction * rel_tol * thermal_moment(m, rel_tol);
    return correlation_value_floored(m, tau, rel_tol, floor);
}

Eigen::Matrix2cd jc_correlation_value(const SpectralModel& m, double tau,
                                      double rel_tol) {
    m.validate();
    if (m.family == SpectralFamily::SingleMode)
        return single_mode_matrix(m.mode_frequency, m.mode_weight,
                                  coth_of(m.mode_frequency, m.temperature), tau);
    const double floor = kFloorFraction * rel_tol * thermal_moment(m, rel_tol);
    return jc_correlation_value_floored(m, tau, rel_tol, floor);
}

std::vector<complexd> correlation_line(const SpectralModel& m,
                                       const TimeGrid& grid, double rel_tol) {
    m.validate();
    std::vector<complexd> line(grid.n_points);
    if (m.family == SpectralFamily::SingleMode) {
        for (int k = 0; k < grid.n_points; ++k)
            line[k] = correlation_value(m, grid.node(k), rel_tol);
        return line;
    }
    const double floor = kFloorFraction * rel_tol * thermal_moment(m, rel_tol);
    for (int k = 0; k < grid.n_points; ++k)
        line[k] = correlation_value_floored(m, grid.node(k), rel_tol, floor);
    return line;
}

// ---- grid builders ----

CorrelationKernel build_correlation(const SpectralModel& m, const TimeGrid& grid,
                                    double rel_tol) {
    auto line = correlation_line(m, grid, rel_tol);
    CorrelationKernel k(grid, KernelRank::Scalar);
    k.stationary = true;
    for (int a = 0; a < grid.n_points; ++a)
        for (int b = 0; b < grid.n_points; ++b)
            k.comps[0](a, b) = (a >= b) ? line[a - b] : std::conj(line[b - a]);
    return k;
}

CorrelationKernel build_jc_correlation_matrix(const SpectralModel& m,
                                              const TimeGrid& grid,
                                              double rel_tol) {
    m.validate();
    const bool analytic = m.family == SpectralFamily::SingleMode;
    const double floor =
        analytic ? 0.0 : kFloorFraction * rel_tol * thermal_moment(m, rel_tol);
    std::vector<Eigen::Matrix2cd> line(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k)
        line[k] = analytic
                      ? jc_correlation_value(m, grid.node(k), rel_tol)
                      : jc_correlation_value_floored(m, grid.node(k), rel_tol,
                                                     floor);

    CorrelationKernel k(grid, KernelRank::Matrix2x2);
    k.stationary = true;
    for (int a = 0; a < grid.n_points; ++a)
        for (int b = 0; b < grid.n_points; ++b) {
            const Eigen::Matrix2cd d =
                (a >= b) ? line[a - b] : Eigen::Matrix2cd(line[b - a].adjoint());
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) k.comps[2 * i + j](a, b) = d(i, j);
        }
    return k;
}

CorrelationKernel make_stationary_kernel(
    const TimeGrid& grid, const std::function<complexd(double)>& D) {
    std::vector<complexd> line(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k) line[k] = D(grid.node(k));
    CorrelationKernel k(grid, KernelRank::Scalar);
    k.stationary = true;
    for (int a = 0; a < grid.n_points; ++a)
        for (int b = 0; b < grid.n_points; ++b)
            k.comps[0](a, b) = (a >= b) ? line[a - b] : std::conj(line[b - a]);
    return k;
}

// ---- discrete-mode analytic correlations ----

complexd discrete_correlation(const std::vector<std::pair<double, double>>& modes,
                              double temperature, double tau) {
    complexd acc(0.0, 0.0);
    for (const auto& [w, g_sq] : modes)
        acc += g_sq * complexd(coth_of(w, temperature) * std::cos(w * tau),
                               -std::sin(w * tau));
    return acc;
}

Eigen::Matrix2cd discrete_jc_correlation(
    const std::vector<std::pair<double, double>>& modes, double temperature,
    double tau) {
    Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
    for (const auto& [w, g_sq] : modes)
        acc += single_mode_matrix(w, g_sq, coth_of(w, temperature), tau);
    return acc;
}

// ---- CorrelationKernel ----

CorrelationKernel::CorrelationKernel(TimeGrid g, KernelRank r)
    : grid(g), rank(r) {
    const int n = grid.n_points;
    const int active = (rank == KernelRank::Scalar) ? 1 : 4;
    for (int c = 0; c < 4; ++c)
        comps[c] = (c < active) ? Eigen::MatrixXcd::Zero(n, n).eval()
                                : Eigen::MatrixXcd();
}

Eigen::Matrix2cd CorrelationKernel::matrix_value(int k, int l) const {
    Eigen::Matrix2cd d;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) d(i, j) = comps[2 * i + j](k, l);
    return d;
}

double CorrelationKernel::max_abs() const {
    const int active = (rank == KernelRank::Scalar) ? 1 : 4;
    double m = 0.0;
    for (int c = 0; c < active; ++c)
        m = std::max(m, comps[c].cwiseAbs().maxCoeff());
    return m;
}

double CorrelationKernel::hermiticity_defect() const {
    const int n = grid.n_points;
    double worst = 0.0;
    if (rank == KernelRank::Scalar) {
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
                worst = std::max(worst,
                                 std::abs(comps[0](k, l) - std::conj(comps[0](l, k))));
        return worst;
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    worst = std::max(worst, std::abs(comps[2 * i + j](k, l) -
                                                     std::conj(comps[2 * j + i](l, k))));
    return worst;
}

double CorrelationKernel::stationarity_defect() const {
    const int n = grid.n_points;
    const int active = (rank == KernelRank::Scalar) ? 1 : 4;
    double worst = 0.0;
    for (int c = 0; c < active; ++c)
        for (int k = 0; k + 1 < n; ++k)
            for (int l = 0; l + 1 < n; ++l)
                worst = std::max(worst,
                                 std::abs(comps[c](k, l) - comps[c](k + 1, l + 1)));
    return worst;
}

bool CorrelationKernel::finite() const {
    const int active = (rank == KernelRank::Scalar) ? 1 : 4;
    for (int c = 0; c < active; ++c)
        if (!comps[c].allFinite()) return false;
    return true;
}

} // namespace qmek::bath
