#include "qmek/run.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qmek/bath.hpp"
#include "qmek/dynamics.hpp"
#include "qmek/errors.hpp"
#include "qmek/kernels.hpp"
#include "qmek/oracle.hpp"
#include "qmek/propagator.hpp"

namespace qmek::run {

namespace fs = std::filesystem;

namespace {

// fig1 preset: the headline parameter point (all quantities in units of the
// qubit splitting scale, hbar = k_B = 1)
constexpr double kFig1Delta = 10.0;
constexpr double kFig1Epsilon = 10.0;
constexpr double kFig1K0Sq = 0.4;
constexpr double kFig1Temperature = 1.0;
constexpr double kFig1PrefactorA = 6.283185307179586; // 2 pi
constexpr double kFig1CutoffLambda = 20.0;
constexpr int kFig1NMax = 6;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

std::string hash_hex(const config::RunConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%016llx",
                  static_cast<unsigned long long>(config::config_hash(cfg)));
    return buf;
}

const char* method_name(kernels::ResumMethod m) {
    return m == kernels::ResumMethod::Truncated ? "truncated" : "resolvent";
}

void common_header(std::ostream& out, const config::RunConfig& cfg,
                   const char* what) {
    out << "# qmek " << what << "\n";
    out << "# mode = " << config::to_string(cfg.mode) << "\n";
    out << "# config_hash = " << hash_hex(cfg) << "\n";
    out << "# seed = " << cfg.seed << "\n";
    out << "# grid: t_max = " << fmt(cfg.grid.t_max)
        << ", n_points = " << cfg.grid.n_points << "\n";
}

void model_echo(std::ostream& out, const config::RunConfig& cfg) {
    out << "# model: delta = " << fmt(cfg.model.delta)
        << ", epsilon = " << fmt(cfg.model.epsilon)
        << ", k0_sq = " << fmt(cfg.model.k0_sq)
        << ", omega0 = " << fmt(cfg.model.omega0) << "\n";
}

void spectral_echo(std::ostream& out, const bath::SpectralModel& m) {
    out << "# spectral: ";
    switch (m.family) {
        case bath::SpectralFamily::OhmicGaussianCutoff:
            out << "family = ohmic-gaussian, prefactor_a = " << fmt(m.prefactor_a)
                << ", cutoff_lambda = " << fmt(m.cutoff_lambda);
            break;
        case bath::SpectralFamily::SingleMode:
            out << "family = single-mode, mode_frequency = "
                << fmt(m.mode_frequency)
                << ", mode_weight = " << fmt(m.mode_weight);
            break;
        case bath::SpectralFamily::Tabulated:
            out << "family = tabulated, n_samples = " << m.samples.size();
            break;
    }
    out << ", temperature = " << fmt(m.temperature) << "\n";
}

void series_echo(std::ostream& out, const kernels::CoefficientTable& table,
                 kernels::ResumMethod method) {
    out << "# series: n_max = " << table.n_max
        << ", method = " << method_name(method)
        << ", active_order = " << table.active_order << "\n";
    out << "# series_status = " << table.series_status << "\n";
}

void validated_spectral(const bath::SpectralModel& m) {
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError("spectral", e.what());
    }
}

kernels::CoefficientTable scalar_table(const config::RunConfig& cfg) {
    validated_spectral(cfg.spectral);
    const propagator::TlsParams p{cfg.model.delta, cfg.model.epsilon};
    const auto base = bath::build_correlation(cfg.spectral, cfg.grid);
    const auto C = kernels::make_contraction(p, cfg.grid, cfg.model.k0_sq);
    const auto b = propagator::PropagatorTable::build_tls(p, cfg.grid);
    return kernels::build_coefficients(base, C, b, cfg.model.k0_sq,
                                       cfg.series.n_max, cfg.series.method);
}

kernels::CoefficientTable jc_table(const config::RunConfig& cfg) {
    validated_spectral(cfg.spectral);
    const auto base = bath::build_jc_correlation_matrix(cfg.spectral, cfg.grid);
    const auto C =
        kernels::make_jc_contraction(cfg.model.omega0, cfg.grid, cfg.model.k0_sq);
    const auto b = propagator::PropagatorTable::build_jc(cfg.model.omega0, cfg.grid);
    return kernels::build_coefficients(base, C, b, cfg.model.k0_sq,
                                       cfg.series.n_max, cfg.series.method);
}

// column block per order: re/im of each coefficient component
void scalar_columns(std::ostream& out, const kernels::CoefficientTable& table,
                    kernels::ResumMethod method) {
    static const std::array<const char*, 3> comp = {"zx", "zy", "zz"};
    out << "# columns: t";
    for (size_t n = 1; n <= table.orders.size(); ++n) {
        std::string tag = method == kernels::ResumMethod::Resolvent
                              ? std::string("resolvent")
                              : std::to_string(n);
        for (const char* c : comp)
            out << ",re_B" << c << "_" << tag << ",im_B" << c << "_" << tag;
    }
    if (method == kernels::ResumMethod::Resolvent) out << ",condition_estimate";
    out << "\n";
}

std::string write_scalar_coeffs(const config::RunConfig& cfg,
                                const kernels::CoefficientTable& table,
                                kernels::ResumMethod method,
                                const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "coefficient table");
    model_echo(out, cfg);
    spectral_echo(out, cfg.spectral);
    series_echo(out, table, method);
    scalar_columns(out, table, method);
    for (int k = 0; k < table.grid.n_points; ++k) {
        out << fmt(table.grid.node(k));
        for (size_t n = 1; n <= table.orders.size(); ++n)
            for (int c = 0; c < 3; ++c) {
                const bath::complexd v = table.B(int(n), c, k);
                out << "," << fmt(v.real()) << "," << fmt(v.imag());
            }
        if (method == kernels::ResumMethod::Resolvent)
            out << "," << fmt(table.condition_numbers[k]);
        out << "\n";
    }
    return path.string();
}

std::string write_bloch_trajectory(const config::RunConfig& cfg,
                                   const kernels::CoefficientTable& table,
                                   const dynamics::BlochTrajectory& traj,
                                   const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "Bloch trajectory");
    model_echo(out, cfg);
    spectral_echo(out, cfg.spectral);
    series_echo(out, table, cfg.series.method);
    out << "# max_norm = " << fmt(traj.max_norm)
        << ", positivity_ok = " << (traj.positivity_ok ? 1 : 0) << "\n";
    out << "# columns: t,v_x,v_y,v_z,norm\n";
    for (size_t k = 0; k < traj.t.size(); ++k)
        out << fmt(traj.t[k]) << "," << fmt(traj.v[k].x()) << ","
            << fmt(traj.v[k].y()) << "," << fmt(traj.v[k].z()) << ","
            << fmt(traj.v[k].norm()) << "\n";
    return path.string();
}

RunResult run_coeffs(const config::RunConfig& cfg, const fs::path& dir) {
    const auto table = scalar_table(cfg);
    const fs::path path = dir / (cfg.output_prefix + "_coeffs.csv");
    return {{write_scalar_coeffs(cfg, table, cfg.series.method, path)}};
}

RunResult run_bloch(const config::RunConfig& cfg, const fs::path& dir) {
    const auto table = scalar_table(cfg);
    const auto traj = dynamics::evolve_bloch(table, cfg.initial_bloch, cfg.grid);
    const fs::path main_path = dir / (cfg.output_prefix + "_bloch.csv");
    const fs::path coeff_path = dir / (cfg.output_prefix + "_coeffs.csv");
    RunResult res;
    res.artifacts.push_back(write_bloch_trajectory(cfg, table, traj, main_path));
    res.artifacts.push_back(
        write_scalar_coeffs(cfg, table, cfg.series.method, coeff_path));
    return res;
}

RunResult run_jc(const config::RunConfig& cfg, const fs::path& dir) {
    const auto table = jc_table(cfg);
    const auto rho0 = dynamics::rho_from_bloch(cfg.initial_bloch);
    const auto traj =
        dynamics::evolve_jc(table, rho0, cfg.model.omega0, cfg.grid);
    const fs::path path = dir / (cfg.output_prefix + "_jc.csv");
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "rotating-frame trajectory");
    model_echo(out, cfg);
    spectral_echo(out, cfg.spectral);
    series_echo(out, table, cfg.series.method);
    out << "# max_trace_dev = " << fmt(traj.max_trace_dev)
        << ", max_herm_dev = " << fmt(traj.max_herm_dev)
        << ", negative_rate = " << (traj.negative_rate ? 1 : 0) << "\n";
    out << "# columns: t,re_rho_ee,re_rho_eg,im_rho_eg,re_rho_gg,"
           "gamma_minus,gamma_plus\n";
    for (size_t k = 0; k < traj.t.size(); ++k) {
        const dynamics::Qubit2x2& r = traj.rho[k];
        out << fmt(traj.t[k]) << "," << fmt(r(0, 0).real()) << ","
            << fmt(r(0, 1).real()) << "," << fmt(r(0, 1).imag()) << ","
            << fmt(r(1, 1).real()) << "," << fmt(traj.gamma_minus[k]) << ","
            << fmt(traj.gamma_plus[k]) << "\n";
    }
    return {{path.string()}};
}

RunResult run_dephasing_exact(const config::RunConfig& cfg, const fs::path& dir) {
    if (cfg.model.delta != 0.0)
        throw SchemaError("model.delta", "exact dephasing requires zero tunneling");
    validated_spectral(cfg.spectral);
    const auto traj = dynamics::pure_dephasing_exact(
        cfg.spectral, cfg.model.k0_sq, cfg.model.epsilon, 0.0,
        cfg.initial_bloch, cfg.grid);
    const fs::path path = dir / (cfg.output_prefix + "_dephasing.csv");
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "closed-form dephasing reference");
    model_echo(out, cfg);
    spectral_echo(out, cfg.spectral);
    out << "# reference = closed-form pure dephasing (transverse decay "
           "exp(-Gamma(t)), constant v_z)\n";
    out << "# columns: t,v_x,v_y,v_z,exponent\n";
    for (size_t k = 0; k < traj.t.size(); ++k)
        out << fmt(traj.t[k]) << "," << fmt(traj.v[k].x()) << ","
            << fmt(traj.v[k].y()) << "," << fmt(traj.v[k].z()) << ","
            << fmt(dynamics::dephasing_exponent(cfg.spectral, cfg.model.k0_sq,
                                                traj.t[k]))
            << "\n";
    return {{path.string()}};
}

RunResult run_markov(const config::RunConfig& cfg, const fs::path& dir) {
    const double rate = cfg.markov_rate;
    const auto rho0 = dynamics::rho_from_bloch(cfg.initial_bloch);
    const auto traj =
        dynamics::markov_evolve([rate](double) { return rate; }, rho0, cfg.grid);
    const fs::path path = dir / (cfg.output_prefix + "_markov.csv");
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "markov dephasing reference");
    out << "# markov: rate = " << fmt(rate)
        << ", negative_rate = " << (traj.negative_rate ? 1 : 0) << "\n";
    out << "# columns: t,re_rho_ee,re_rho_eg,im_rho_eg,abs_rho_eg\n";
    for (size_t k = 0; k < traj.t.size(); ++k) {
        const dynamics::Qubit2x2& r = traj.rho[k];
        out << fmt(traj.t[k]) << "," << fmt(r(0, 0).real()) << ","
            << fmt(r(0, 1).real()) << "," << fmt(r(0, 1).imag()) << ","
            << fmt(std::abs(r(0, 1))) << "\n";
    }
    return {{path.string()}};
}

// Bloch-frame swap x<->z, y -> -y: maps the transverse-coupling model onto
// the longitudinal-coupling machinery and back.
dynamics::BlochVector hadamard_frame(const dynamics::BlochVector& v) {
    return {v.z(), -v.y(), v.x()};
}

bath::CorrelationKernel discrete_scalar_kernel(
    const std::vector<std::pair<double, double>>& modes, double T,
    const TimeGrid& grid) {
    return bath::make_stationary_kernel(grid, [&](double tau) {
        return bath::discrete_correlation(modes, T, tau);
    });
}

bath::CorrelationKernel discrete_matrix_kernel(
    const std::vector<std::pair<double, double>>& modes, double T,
    const TimeGrid& grid) {
    bath::CorrelationKernel ker(grid, bath::KernelRank::Matrix2x2);
    ker.stationary = true;
    std::vector<Eigen::Matrix2cd> line(grid.n_points);
    for (int j = 0; j < grid.n_points; ++j)
        line[j] = bath::discrete_jc_correlation(modes, T, grid.node(j));
    for (int k = 0; k < grid.n_points; ++k)
        for (int l = 0; l < grid.n_points; ++l) {
            const Eigen::Matrix2cd m =
                k >= l ? line[k - l] : Eigen::Matrix2cd(line[l - k].adjoint());
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) ker.comps[2 * i + j](k, l) = m(i, j);
        }
    return ker;
}

RunResult run_oracle_compare(const config::RunConfig& cfg, const fs::path& dir) {
    const auto bathspec = oracle::ensure_thermal_cutoffs(cfg.oracle_block.bath);
    std::vector<std::pair<double, double>> modes;
    modes.reserve(bathspec.modes.size());
    for (const oracle::Mode& m : bathspec.modes)
        modes.emplace_back(m.omega, m.g_sq);
    const double T = bathspec.temperature;
    const TimeGrid& grid = cfg.grid;
    const std::string& which = cfg.oracle_block.model;

    std::vector<dynamics::Qubit2x2> me_rho;
    kernels::CoefficientTable table;
    Eigen::MatrixXcd H;
    if (which == "spin-boson") {
        const propagator::TlsParams p{cfg.model.delta, cfg.model.epsilon};
        const auto base = discrete_scalar_kernel(modes, T, grid);
        const auto C = kernels::make_contraction(p, grid, cfg.model.k0_sq);
        const auto b = propagator::PropagatorTable::build_tls(p, grid);
        table = kernels::build_coefficients(base, C, b, cfg.model.k0_sq,
                                            cfg.series.n_max, cfg.series.method);
        const auto traj = dynamics::evolve_bloch(table, cfg.initial_bloch, grid);
        for (const auto& v : traj.v) me_rho.push_back(dynamics::rho_from_bloch(v));
        H = oracle::build_hamiltonian(
            bathspec, oracle::SpinBosonModel{cfg.model.delta, cfg.model.epsilon,
                                             std::sqrt(cfg.model.k0_sq)});
    } else if (which == "rabi") {
        // transverse sigma_x phi coupling == longitudinal machinery in the
        // swapped frame with tunneling -omega0 and bare coupling k0 = 2
        const propagator::TlsParams p{-cfg.model.omega0, 0.0};
        const double k0_sq = 4.0;
        const auto base = discrete_scalar_kernel(modes, T, grid);
        const auto C = kernels::make_contraction(p, grid, k0_sq);
        const auto b = propagator::PropagatorTable::build_tls(p, grid);
        table = kernels::build_coefficients(base, C, b, k0_sq, cfg.series.n_max,
                                            cfg.series.method);
        const auto traj = dynamics::evolve_bloch(
            table, hadamard_frame(cfg.initial_bloch), grid);
        for (const auto& v : traj.v)
            me_rho.push_back(dynamics::rho_from_bloch(hadamard_frame(v)));
        H = oracle::build_hamiltonian(bathspec, oracle::RabiModel{cfg.model.omega0});
    } else { // jaynes-cummings
        const auto base = discrete_matrix_kernel(modes, T, grid);
        const auto C =
            kernels::make_jc_contraction(cfg.model.omega0, grid, cfg.model.k0_sq);
        const auto b = propagator::PropagatorTable::build_jc(cfg.model.omega0, grid);
        table = kernels::build_coefficients(base, C, b, cfg.model.k0_sq,
                                            cfg.series.n_max, cfg.series.method);
        const auto traj = dynamics::evolve_jc(
            table, dynamics::rho_from_bloch(cfg.initial_bloch),
            cfg.model.omega0, grid);
        me_rho = traj.rho;
        H = oracle::build_hamiltonian(bathspec,
                                      oracle::JaynesCummingsModel{cfg.model.omega0});
    }

    const Eigen::MatrixXcd rho_total0 = oracle::product_state(
        dynamics::rho_from_bloch(cfg.initial_bloch), bathspec);
    const auto otraj = oracle::evolve_exact(H, rho_total0, grid);
    const auto rep = oracle::compare(me_rho, otraj);

    const fs::path path = dir / (cfg.output_prefix + "_oracle_compare.csv");
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "master equation vs exact diagonalization");
    model_echo(out, cfg);
    out << "# oracle: model = " << which << ", temperature = " << fmt(T)
        << ", modes = " << bathspec.modes.size() << ", cutoffs =";
    for (const oracle::Mode& m : bathspec.modes) out << " " << m.fock_cutoff;
    out << "\n";
    series_echo(out, table, cfg.series.method);
    out << "# max_trace_distance = " << fmt(rep.max_trace_distance)
        << " at t = " << fmt(grid.node(rep.argmax_index)) << "\n";
    out << "# oracle diagnostics: max_trace_dev = " << fmt(otraj.max_trace_dev)
        << ", min_eigenvalue = " << fmt(otraj.min_eigenvalue) << "\n";
    out << "# columns: t,trace_distance,re_me_ee,re_me_eg,im_me_eg,"
           "re_oracle_ee,re_oracle_eg,im_oracle_eg\n";
    for (int k = 0; k < grid.n_points; ++k) {
        const dynamics::Qubit2x2& a = me_rho[k];
        const dynamics::Qubit2x2& b = otraj.rho[k];
        out << fmt(grid.node(k)) << "," << fmt(rep.trace_distance[k]) << ","
            << fmt(a(0, 0).real()) << "," << fmt(a(0, 1).real()) << ","
            << fmt(a(0, 1).imag()) << "," << fmt(b(0, 0).real()) << ","
            << fmt(b(0, 1).real()) << "," << fmt(b(0, 1).imag()) << "\n";
    }
    return {{path.string()}};
}

config::RunConfig fig1_effective(const config::RunConfig& cfg) {
    config::RunConfig eff = cfg;
    eff.model.delta = kFig1Delta;
    eff.model.epsilon = kFig1Epsilon;
    eff.model.k0_sq = kFig1K0Sq;
    eff.model.omega0 = 0.0;
    eff.spectral = bath::SpectralModel::ohmic_gaussian(
        kFig1PrefactorA, kFig1CutoffLambda, kFig1Temperature);
    eff.series.n_max = kFig1NMax;
    eff.series.method = kernels::ResumMethod::Truncated;
    return eff;
}

RunResult run_fig1(const config::RunConfig& cfg, const fs::path& dir,
                   bool verbose) {
    const config::RunConfig eff = fig1_effective(cfg);
    const auto table = scalar_table(eff);
    const fs::path path = dir / (cfg.output_prefix + "_fig1_bzz.csv");
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "longitudinal coefficient vs truncation order");
    out << "# preset: tunneling = " << fmt(kFig1Delta)
        << ", splitting = " << fmt(kFig1Epsilon)
        << ", k0_sq = " << fmt(kFig1K0Sq)
        << ", temperature = " << fmt(kFig1Temperature)
        << ", ohmic prefactor_a = " << fmt(kFig1PrefactorA)
        << ", cutoff_lambda = " << fmt(kFig1CutoffLambda) << "\n";
    series_echo(out, table, kernels::ResumMethod::Truncated);
    out << "# columns: t";
    for (int n = 1; n <= table.n_max; ++n) out << ",re_Bzz_" << n;
    out << "\n";
    for (int k = 0; k < table.grid.n_points; ++k) {
        out << fmt(table.grid.node(k));
        for (int n = 1; n <= table.n_max; ++n)
            out << "," << fmt(table.B(n, 2, k).real());
        out << "\n";
    }
    out.close();

    RunResult res;
    res.artifacts.push_back(path.string());
    res.artifacts.push_back(emit_supp_fig2(cfg, dir.string(), verbose));
    return res;
}

} // namespace

RunResult run(const config::RunConfig& cfg, const std::string& out_dir,
              bool verbose) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    RunResult res;
    switch (cfg.mode) {
        case config::RunMode::Coeffs: res = run_coeffs(cfg, dir); break;
        case config::RunMode::Bloch: res = run_bloch(cfg, dir); break;
        case config::RunMode::Jc: res = run_jc(cfg, dir); break;
        case config::RunMode::DephasingExact:
            res = run_dephasing_exact(cfg, dir);
            break;
        case config::RunMode::Markov: res = run_markov(cfg, dir); break;
        case config::RunMode::OracleCompare:
            res = run_oracle_compare(cfg, dir);
            break;
        case config::RunMode::Fig1: res = run_fig1(cfg, dir, verbose); break;
    }
    if (verbose)
        for (const std::string& a : res.artifacts)
            std::cout << "wrote " << a << "\n";
    return res;
}

std::string emit_supp_fig2(const config::RunConfig& cfg,
                           const std::string& out_dir, bool verbose) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const config::RunConfig eff = fig1_effective(cfg);
    const auto table = scalar_table(eff);

    const fs::path path = dir / (cfg.output_prefix + "_fig1_companion.csv");
    std::ofstream out(path, std::ios::binary);
    common_header(out, cfg, "off-diagonal coefficient blocks vs truncation order");
    series_echo(out, table, kernels::ResumMethod::Truncated);
    struct Block {
        const char* label;
        int comp;
        bool real_part;
    };
    const std::array<Block, 4> blocks = {{{"re_Bzx", 0, true},
                                          {"im_Bzx", 0, false},
                                          {"re_Bzy", 1, true},
                                          {"im_Bzy", 1, false}}};
    for (const Block& b : blocks) {
        out << "# block: " << b.label << " per order\n";
        out << "# columns: t";
        for (int n = 1; n <= table.n_max; ++n)
            out << "," << b.label << "_" << n;
        out << "\n";
        for (int k = 0; k < table.grid.n_points; ++k) {
            out << fmt(table.grid.node(k));
            for (int n = 1; n <= table.n_max; ++n) {
                const bath::complexd v = table.B(n, b.comp, k);
                out << "," << fmt(b.real_part ? v.real() : v.imag());
            }
            out << "\n";
        }
    }
    out.close();
    if (verbose) std::cout << "wrote " << path.string() << "\n";
    return path.string();
}

} // namespace qmek::run
