#include "qmek/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qmek/errors.hpp"

namespace qmek::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw SchemaError(path, what);
}

void reject_unknown(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(),
                        [&](const char* k) { return it.key() == k; });
        if (!known)
            fail(prefix.empty() ? it.key() : prefix + "." + it.key(),
                 "unknown key");
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double need_double(const json& obj, const char* key, const std::string& prefix) {
    const json* v = find(obj, key);
    const std::string path = prefix + "." + key;
    if (!v) fail(path, "required");
    if (!v->is_number()) fail(path, "must be a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
}

double opt_double(const json& obj, const char* key, const std::string& prefix,
                  double fallback) {
    if (!find(obj, key)) return fallback;
    return need_double(obj, key, prefix);
}

int need_int(const json& obj, const char* key, const std::string& prefix) {
    const json* v = find(obj, key);
    const std::string path = prefix + "." + key;
    if (!v) fail(path, "required");
    if (!v->is_number_integer()) fail(path, "must be an integer");
    return v->get<int>();
}

std::string need_string(const json& obj, const char* key,
                        const std::string& prefix) {
    const json* v = find(obj, key);
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!v) fail(path, "required");
    if (!v->is_string()) fail(path, "must be a string");
    return v->get<std::string>();
}

const json& need_object(const json& obj, const char* key) {
    const json* v = find(obj, key);
    if (!v) fail(key, "required for this mode");
    if (!v->is_object()) fail(key, "must be an object");
    return *v;
}

bool mode_needs_model(RunMode m) {
    return m == RunMode::Coeffs || m == RunMode::Bloch || m == RunMode::Jc ||
           m == RunMode::DephasingExact || m == RunMode::OracleCompare;
}

bool mode_needs_spectral(RunMode m) {
    return m == RunMode::Coeffs || m == RunMode::Bloch || m == RunMode::Jc ||
           m == RunMode::DephasingExact;
}

bool mode_needs_series(RunMode m) {
    return m == RunMode::Coeffs || m == RunMode::Bloch || m == RunMode::Jc ||
           m == RunMode::OracleCompare;
}

void parse_grid(const json& g, RunConfig& cfg) {
    reject_unknown(g, "grid", {"t_max", "n_points"});
    const double t_max = need_double(g, "t_max", "grid");
    if (t_max <= 0.0) fail("grid.t_max", "must be > 0");
    const int n = need_int(g, "n_points", "grid");
    if (n < 3) fail("grid.n_points", "needs at least 3 nodes");
    cfg.grid = TimeGrid(t_max, n);
}

void parse_model(const json& m, RunConfig& cfg, bool scalar_required,
                 bool omega0_required) {
    reject_unknown(m, "model", {"delta", "epsilon", "k0_sq", "omega0"});
    if (scalar_required) {
        cfg.model.delta = need_double(m, "delta", "model");
        cfg.model.epsilon = need_double(m, "epsilon", "model");
        cfg.model.k0_sq = need_double(m, "k0_sq", "model");
    } else {
        cfg.model.delta = opt_double(m, "delta", "model", 0.0);
        cfg.model.epsilon = opt_double(m, "epsilon", "model", 0.0);
        cfg.model.k0_sq = opt_double(m, "k0_sq", "model", 0.0);
    }
    cfg.model.omega0 = omega0_required ? need_double(m, "omega0", "model")
                                       : opt_double(m, "omega0", "model", 0.0);
    if (cfg.model.k0_sq < 0.0) fail("model.k0_sq", "must be >= 0");
}

void parse_spectral(const json& s, RunConfig& cfg) {
    reject_unknown(s, "spectral",
                   {"family", "temperature", "prefactor_a", "cutoff_lambda",
                    "mode_frequency", "mode_weight", "delta_width_fraction",
                    "samples"});
    const std::string family = need_string(s, "family", "spectral");
    bath::SpectralModel& sm = cfg.spectral;
    sm.temperature = need_double(s, "temperature", "spectral");
    if (sm.temperature < 0.0) fail("spectral.temperature", "must be >= 0");

    if (family == "ohmic-gaussian") {
        sm.family = bath::SpectralFamily::OhmicGaussianCutoff;
        sm.prefactor_a = need_double(s, "prefactor_a", "spectral");
        sm.cutoff_lambda = need_double(s, "cutoff_lambda", "spectral");
        if (sm.prefactor_a < 0.0) fail("spectral.prefactor_a", "must be >= 0");
        if (sm.cutoff_lambda <= 0.0) fail("spectral.cutoff_lambda", "must be > 0");
    } else if (family == "single-mode") {
        sm.family = bath::SpectralFamily::SingleMode;
        sm.mode_frequency = need_double(s, "mode_frequency", "spectral");
        sm.mode_weight = need_double(s, "mode_weight", "spectral");
        sm.delta_width_fraction =
            opt_double(s, "delta_width_fraction", "spectral", 1e-3);
        if (sm.mode_frequency <= 0.0) fail("spectral.mode_frequency", "must be > 0");
        if (sm.mode_weight < 0.0) fail("spectral.mode_weight", "must be >= 0");
        if (!(sm.delta_width_fraction > 0.0 && sm.delta_width_fraction <= 0.1))
            fail("spectral.delta_width_fraction", "must lie in (0, 0.1]");
    } else if (family == "tabulated") {
        sm.family = bath::SpectralFamily::Tabulated;
        const json* tab = find(s, "samples");
        if (!tab) fail("spectral.samples", "required");
        if (!tab->is_array() || tab->empty())
            fail("spectral.samples", "must be a non-empty array of [w, J] pairs");
        sm.samples.clear();
        double prev = -1.0;
        for (const json& row : *tab) {
            if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
                !row[1].is_number())
                fail("spectral.samples", "each entry must be a [w, J] pair");
            const double w = row[0].get<double>();
            const double jv = row[1].get<double>();
            if (!std::isfinite(w) || !std::isfinite(jv) || w < 0.0 || jv < 0.0 ||
                w <= prev)
                fail("spectral.samples",
                     "frequencies must be strictly increasing and values >= 0");
            prev = w;
            sm.samples.emplace_back(w, jv);
        }
    } else {
        fail("spectral.family",
             "expected ohmic-gaussian, single-mode, or tabulated");
    }
}

void parse_series(const json& s, RunConfig& cfg) {
    reject_unknown(s, "series", {"n_max", "method"});
    cfg.series.n_max = need_int(s, "n_max", "series");
    if (cfg.series.n_max < 1) fail("series.n_max", "must be >= 1");
    if (const json* m = find(s, "method")) {
        if (!m->is_string()) fail("series.method", "must be a string");
        const std::string v = m->get<std::string>();
        if (v == "truncated")
            cfg.series.method = kernels::ResumMethod::Truncated;
        else if (v == "resolvent")
            cfg.series.method = kernels::ResumMethod::Resolvent;
        else
            fail("series.method", "expected truncated or resolvent");
    }
}

void parse_markov(const json& m, RunConfig& cfg) {
    reject_unknown(m, "markov", {"rate"});
    cfg.markov_rate = need_double(m, "rate", "markov");
}

void parse_oracle(const json& o, RunConfig& cfg) {
    reject_unknown(o, "oracle", {"model", "temperature", "modes"});
    const std::string model = need_string(o, "model", "oracle");
    if (model != "rabi" && model != "jaynes-cummings" && model != "spin-boson")
        fail("oracle.model", "expected rabi, jaynes-cummings, or spin-boson");
    cfg.oracle_block.model = model;
    cfg.oracle_block.bath.temperature = need_double(o, "temperature", "oracle");
    if (cfg.oracle_block.bath.temperature < 0.0)
        fail("oracle.temperature", "must be >= 0");

    const json* modes = find(o, "modes");
    if (!modes) fail("oracle.modes", "required");
    if (!modes->is_array()) fail("oracle.modes", "must be an array");
    cfg.oracle_block.bath.modes.clear();
    int idx = 0;
    for (const json& row : *modes) {
        std::ostringstream prefix;
        prefix << "oracle.modes[" << idx << "]";
        if (!row.is_object()) fail(prefix.str(), "must be an object");
        reject_unknown(row, prefix.str(), {"omega", "g_sq", "fock_cutoff"});
        oracle::Mode mode;
        mode.omega = need_double(row, "omega", prefix.str());
        mode.g_sq = need_double(row, "g_sq", prefix.str());
        mode.fock_cutoff = need_int(row, "fock_cutoff", prefix.str());
        if (mode.omega <= 0.0) fail(prefix.str() + ".omega", "must be > 0");
        if (mode.g_sq < 0.0) fail(prefix.str() + ".g_sq", "must be >= 0");
        if (mode.fock_cutoff < 2)
            fail(prefix.str() + ".fock_cutoff", "needs at least two Fock levels");
        cfg.oracle_block.bath.modes.push_back(mode);
        ++idx;
    }
    try {
        cfg.oracle_block.bath.validate();
    } catch (const std::invalid_argument& e) {
        fail("oracle.modes", e.what());
    }
}

const char* family_name(bath::SpectralFamily f) {
    switch (f) {
        case bath::SpectralFamily::OhmicGaussianCutoff: return "ohmic-gaussian";
        case bath::SpectralFamily::SingleMode: return "single-mode";
        case bath::SpectralFamily::Tabulated: return "tabulated";
    }
    return "ohmic-gaussian";
}

} // namespace

const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::Coeffs: return "coeffs";
        case RunMode::Bloch: return "bloch";
        case RunMode::Jc: return "jc";
        case RunMode::DephasingExact: return "dephasing-exact";
        case RunMode::Markov: return "markov";
        case RunMode::OracleCompare: return "oracle-compare";
        case RunMode::Fig1: return "fig1";
    }
    return "coeffs";
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "coeffs") return RunMode::Coeffs;
    if (s == "bloch") return RunMode::Bloch;
    if (s == "jc") return RunMode::Jc;
    if (s == "dephasing-exact") return RunMode::DephasingExact;
    if (s == "markov") return RunMode::Markov;
    if (s == "oracle-compare") return RunMode::OracleCompare;
    if (s == "fig1") return RunMode::Fig1;
    fail("mode",
         "expected coeffs, bloch, jc, dephasing-exact, markov, oracle-compare, "
         "or fig1");
}

RunConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail("<document>", e.what());
    }
    if (!doc.is_object()) fail("<document>", "top level must be an object");

    reject_unknown(doc, "",
                   {"schema_version", "mode", "seed", "grid", "model",
                    "spectral", "series", "markov", "oracle", "initial_bloch",
                    "output_prefix"});

    RunConfig cfg;
    if (const json* v = find(doc, "schema_version")) {
        if (!v->is_number_integer() || v->get<int>() != 1)
            fail("schema_version", "only version 1 is understood");
        cfg.schema_version = 1;
    }

    cfg.mode = run_mode_from_string(need_string(doc, "mode", ""));

    if (const json* v = find(doc, "seed")) {
        if (!v->is_number_unsigned()) fail("seed", "must be a non-negative integer");
        cfg.seed = v->get<std::uint64_t>();
    }

    parse_grid(need_object(doc, "grid"), cfg);

    const bool scalar_model = cfg.mode == RunMode::Coeffs ||
                              cfg.mode == RunMode::Bloch ||
                              cfg.mode == RunMode::DephasingExact;
    const bool needs_omega0 = cfg.mode == RunMode::Jc;
    if (const json* v = find(doc, "model")) {
        if (!v->is_object()) fail("model", "must be an object");
        parse_model(*v, cfg, scalar_model, needs_omega0);
        if (needs_omega0) cfg.model.k0_sq = need_double(*v, "k0_sq", "model");
    } else if (mode_needs_model(cfg.mode)) {
        fail("model", "required for this mode");
    }

    if (const json* v = find(doc, "spectral")) {
        if (!v->is_object()) fail("spectral", "must be an object");
        parse_spectral(*v, cfg);
    } else if (mode_needs_spectral(cfg.mode)) {
        fail("spectral", "required for this mode");
    }

    if (const json* v = find(doc, "series")) {
        if (!v->is_object()) fail("series", "must be an object");
        parse_series(*v, cfg);
    } else if (mode_needs_series(cfg.mode)) {
        fail("series", "required for this mode");
    }

    if (const json* v = find(doc, "markov")) {
        if (!v->is_object()) fail("markov", "must be an object");
        parse_markov(*v, cfg);
    } else if (cfg.mode == RunMode::Markov) {
        fail("markov", "required for this mode");
    }

    if (const json* v = find(doc, "oracle")) {
        if (!v->is_object()) fail("oracle", "must be an object");
        parse_oracle(*v, cfg);
    } else if (cfg.mode == RunMode::OracleCompare) {
        fail("oracle", "required for this mode");
    }

    if (const json* v = find(doc, "initial_bloch")) {
        if (!v->is_array() || v->size() != 3 || !(*v)[0].is_number() ||
            !(*v)[1].is_number() || !(*v)[2].is_number())
            fail("initial_bloch", "must be an array of three numbers");
        cfg.initial_bloch = Eigen::Vector3d((*v)[0].get<double>(),
                                            (*v)[1].get<double>(),
                                            (*v)[2].get<double>());
        if (!cfg.initial_bloch.allFinite() || cfg.initial_bloch.norm() > 1.0 + 1e-9)
            fail("initial_bloch", "must be a physical Bloch vector (norm <= 1)");
    }

    if (const json* v = find(doc, "output_prefix")) {
        if (!v->is_string()) fail("output_prefix", "must be a string");
        cfg.output_prefix = v->get<std::string>();
        if (cfg.output_prefix.empty() ||
            cfg.output_prefix.find('/') != std::string::npos)
            fail("output_prefix", "must be a non-empty file stem");
    }

    // cross-field constraints
    if (cfg.mode == RunMode::DephasingExact && cfg.model.delta != 0.0)
        fail("model.delta", "exact dephasing requires zero tunneling");

    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("<file>", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["mode"] = to_string(cfg.mode);
    j["seed"] = cfg.seed;
    j["grid"] = {{"t_max", cfg.grid.t_max}, {"n_points", cfg.grid.n_points}};
    j["model"] = {{"delta", cfg.model.delta},
                  {"epsilon", cfg.model.epsilon},
                  {"k0_sq", cfg.model.k0_sq},
                  {"omega0", cfg.model.omega0}};

    json sp;
    sp["family"] = family_name(cfg.spectral.family);
    sp["temperature"] = cfg.spectral.temperature;
    switch (cfg.spectral.family) {
        case bath::SpectralFamily::OhmicGaussianCutoff:
            sp["prefactor_a"] = cfg.spectral.prefactor_a;
            sp["cutoff_lambda"] = cfg.spectral.cutoff_lambda;
            break;
        case bath::SpectralFamily::SingleMode:
            sp["mode_frequency"] = cfg.spectral.mode_frequency;
            sp["mode_weight"] = cfg.spectral.mode_weight;
            sp["delta_width_fraction"] = cfg.spectral.delta_width_fraction;
            break;
        case bath::SpectralFamily::Tabulated: {
            json rows = json::array();
            for (const auto& [w, jv] : cfg.spectral.samples)
                rows.push_back(json::array({w, jv}));
            sp["samples"] = rows;
            break;
        }
    }
    j["spectral"] = sp;

    j["series"] = {
        {"n_max", cfg.series.n_max},
        {"method", cfg.series.method == kernels::ResumMethod::Truncated
                       ? "truncated"
                       : "resolvent"}};
    j["markov"] = {{"rate", cfg.markov_rate}};

    json modes = json::array();
    for (const oracle::Mode& m : cfg.oracle_block.bath.modes)
        modes.push_back({{"omega", m.omega},
                         {"g_sq", m.g_sq},
                         {"fock_cutoff", m.fock_cutoff}});
    j["oracle"] = {{"model", cfg.oracle_block.model},
                   {"temperature", cfg.oracle_block.bath.temperature},
                   {"modes", modes}};

    j["initial_bloch"] = json::array({cfg.initial_bloch.x(),
                                      cfg.initial_bloch.y(),
                                      cfg.initial_bloch.z()});
    j["output_prefix"] = cfg.output_prefix;
    return j.dump();
}

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string canon = serialize_config(cfg);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace qmek::config
