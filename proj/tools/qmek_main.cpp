#include <exception>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "qmek/config.hpp"
#include "qmek/errors.hpp"
#include "qmek/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"non-Markovian master-equation tables and trajectories for "
                 "two-level systems"};
    std::string config_path;
    std::string out_dir = ".";
    bool verbose = false;
    app.add_option("--config", config_path, "JSON run configuration file")
        ->required();
    app.add_option("--out-dir", out_dir, "output directory (created if missing)");
    app.add_flag("--verbose", verbose, "print progress and artifact paths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints usage/error text
        return code == 0 ? 0 : 2;
    }

    try {
        const qmek::config::RunConfig cfg =
            qmek::config::load_config_file(config_path);
        const qmek::run::RunResult res = qmek::run::run(cfg, out_dir, verbose);
        for (const std::string& a : res.artifacts) std::cout << a << "\n";
        return 0;
    } catch (const qmek::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qmek::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
