#include "filtrationlab/runner.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Verification runner for invariance times on finite filtered spaces"};
    app.require_subcommand(1);

    filtrationlab::RunConfig config;
    if (const char* env = std::getenv("FILTRATIONLAB_TOL")) {
        try {
            config.tol = std::stod(env);
        } catch (const std::exception&) {
            std::cerr << "FILTRATIONLAB_TOL is not a number: " << env << "\n";
            return 2;
        }
    }
    std::string suite = "all";
    auto* run = app.add_subcommand("run", "Run verification suites over a scenario file");
    run->add_option("--scenarios", config.scenarios, "Scenario JSON file")->required();
    run->add_option("--suite", suite, "azema | invariance | bsde | all")
        ->check(CLI::IsMember({"azema", "invariance", "bsde", "all"}));
    run->add_option("--tol", config.tol, "Residual tolerance (default 1e-9 or FILTRATIONLAB_TOL)");
    run->add_option("--seed", config.seed, "Seed for the randomized martingale family");
    run->add_option("--out", config.out, "Output directory");
    run->add_option("--format", config.format, "Summary format")->check(CLI::IsMember({"json", "csv"}));
    run->add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    config.suite = filtrationlab::suite_from_string(suite);
    return filtrationlab::run(config, std::cerr);
}
