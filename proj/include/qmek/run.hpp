#pragma once

#include <string>
#include <vector>

#include "qmek/config.hpp"

namespace qmek::run {

struct RunResult {
    std::vector<std::string> artifacts; // paths of files written, in order
};

// Execute one configured run into out_dir (created if missing). Every
// artifact starts with '#'-prefixed header lines: config hash, parameter
// echo, series-order labels, and the series-status string for the order used.
// Outputs are byte-identical for identical configs. Errors propagate as
// SchemaError (bad config) or NumericalError (quadrature/solver failure).
RunResult run(const config::RunConfig& cfg, const std::string& out_dir,
              bool verbose = false);

// Companion coefficient blocks (Re/Im of the off-diagonal coefficient pair
// per order 1..n_max) at the same parameters; called by the fig1 preset and
// available standalone.
std::string emit_supp_fig2(const config::RunConfig& cfg,
                           const std::string& out_dir, bool verbose = false);

} // namespace qmek::run
