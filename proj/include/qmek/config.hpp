#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "qmek/grid.hpp"
#include "qmek/kernels.hpp"
#include "qmek/oracle.hpp"
#include "qmek/spectral.hpp"

namespace qmek::config {

// ---- run modes ----

enum class RunMode {
    Coeffs,         // master-equation coefficient tables B(t) per order
    Bloch,          // spin-boson Bloch trajectory
    Jc,             // rotating-wave density-matrix trajectory + rates
    DephasingExact, // closed-form pure-dephasing reference trajectory
    Markov,         // Markovian dephasing channel reference
    OracleCompare,  // master equation vs exact finite-bath diagonalization
    Fig1,           // preset: B^Re_zz(t) for orders 1..6 + companion blocks
};

const char* to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s); // throws SchemaError("mode", ...)

// ---- flat run configuration (schema v1) ----
//
// One JSON document per run. Unknown keys are rejected; missing mode-required
// keys are reported with their full field path.
struct RunConfig {
    int schema_version{1};
    RunMode mode{RunMode::Coeffs};
    std::uint64_t seed{0}; // recorded in headers; reserved for randomized sweeps

    TimeGrid grid{};

    struct ModelBlock {
        double delta{0.0};
        double epsilon{0.0};
        double k0_sq{0.0};
        double omega0{0.0};
    } model;

    bath::SpectralModel spectral{};

    struct SeriesBlock {
        int n_max{1};
        kernels::ResumMethod method{kernels::ResumMethod::Truncated};
    } series;

    double markov_rate{0.0};

    struct OracleBlock {
        std::string model{"rabi"}; // "rabi" | "jaynes-cummings" | "spin-boson"
        oracle::DiscreteBathSpec bath{};
    } oracle_block;

    Eigen::Vector3d initial_bloch{0.0, 0.0, 1.0};
    std::string output_prefix{"run"};
};

// Parse/validate a JSON document. Violations throw SchemaError carrying the
// dotted field path (e.g. "grid.n_points", "model.delta").
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

// Canonical serialization (sorted keys, lossless round-trip floats);
// serialize(parse(serialize(cfg))) == serialize(cfg).
std::string serialize_config(const RunConfig& cfg);

// FNV-1a 64-bit over the canonical serialization; embedded in every artifact.
std::uint64_t config_hash(const RunConfig& cfg);

} // namespace qmek::config
