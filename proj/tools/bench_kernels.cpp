#include <chrono>
#include <cstring>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "qmek/bath.hpp"
#include "qmek/kernels.hpp"
#include "qmek/propagator.hpp"

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
}

bool bits_equal(qmek::bath::complexd a, qmek::bath::complexd b) {
    return std::memcmp(&a, &b, sizeof a) == 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs parallel coefficient-build benchmark"};
    int points = 240;
    int orders = 6;
    app.add_option("--points", points, "time-grid nodes")
        ->check(CLI::Range(3, 20000));
    app.add_option("--orders", orders, "series depth n_max")
        ->check(CLI::Range(1, 12));
    CLI11_PARSE(app, argc, argv);

    using namespace qmek;
    const TimeGrid grid(0.5, points);
    const auto model =
        bath::SpectralModel::ohmic_gaussian(6.283185307179586, 20.0, 1.0);
    const propagator::TlsParams p{10.0, 10.0};
    const double k0_sq = 0.4;

    auto t0 = std::chrono::steady_clock::now();
    const auto base = bath::build_correlation(model, grid);
    const auto C = kernels::make_contraction(p, grid, k0_sq);
    const auto btab = propagator::PropagatorTable::build_tls(p, grid);
    const double setup_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto serial = kernels::build_coefficients(
        base, C, btab, k0_sq, orders, kernels::ResumMethod::Truncated,
        kernels::ExecPolicy::Serial);
    const double serial_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = kernels::build_coefficients(
        base, C, btab, k0_sq, orders, kernels::ResumMethod::Truncated,
        kernels::ExecPolicy::Parallel);
    const double parallel_ms = ms_since(t0);

    long long mismatches = 0;
    for (size_t n = 0; n < serial.orders.size(); ++n)
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < grid.n_points; ++k)
                if (!bits_equal(serial.orders[n][c][k], parallel.orders[n][c][k]))
                    ++mismatches;

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::cout << "grid nodes        : " << points << "\n";
    std::cout << "series depth      : " << orders << "\n";
    std::cout << "threads           : " << threads << "\n";
    std::cout << "kernel tabulation : " << setup_ms << " ms\n";
    std::cout << "serial build      : " << serial_ms << " ms\n";
    std::cout << "parallel build    : " << parallel_ms << " ms\n";
    std::cout << "speedup           : "
              << (parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0) << "\n";
    std::cout << "bitwise mismatches: " << mismatches << "\n";
    if (mismatches != 0) {
        std::cerr << "parallel build is not bitwise-identical to serial\n";
        return 1;
    }
    return 0;
}
