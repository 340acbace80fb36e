#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morkit/bench.hpp"

namespace mor {

/*
 * morbench <subcommand> [--config <path>|default] [--case L] [--method M]
 *          [--out DIR] [--seed S] [--svg]
 *
 * Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.
 */
inline int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"morbench: model-order-reduction benchmarks on advection-diffusion manifolds"};
    app.require_subcommand(1);

    std::string config_arg = "default";
    std::string case_filter, method_filter, out_override;
    std::int64_t seed_override = -1;
    bool svg = false;

    app.add_option("--config", config_arg, "configuration file path, or 'default'");
    app.add_option("--case", case_filter, "restrict to one case label");
    app.add_option("--method", method_filter, "restrict to one method");
    app.add_option("--out", out_override, "override the output directory");
    app.add_option("--seed", seed_override, "override the seed");
    app.add_flag("--svg", svg, "also render SVG plots");
    app.fallthrough();

    auto* cmd_generate = app.add_subcommand("generate", "write train/test snapshot CSVs");
    auto* cmd_spectra = app.add_subcommand("spectra", "eigenvalue-decay CSVs per case");
    auto* cmd_errors = app.add_subcommand("errors", "reconstruction-error CSVs over the N sweep");
    auto* cmd_latents = app.add_subcommand("latents", "N=2 latent-trajectory CSVs");
    auto* cmd_all = app.add_subcommand("all", "the full artifact tree plus manifest");

    std::vector<const char*> argv;
    argv.push_back("morbench");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "morbench: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        BenchConfig cfg = load_bench_config(config_arg);
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (svg) cfg.svg = true;

        if (cmd_generate->parsed()) {
            if (!method_filter.empty())
                throw ValidationError("generate takes no --method filter");
            run_generate(cfg, case_filter);
        } else if (cmd_spectra->parsed()) {
            run_spectra(cfg, case_filter, method_filter);
        } else if (cmd_errors->parsed()) {
            run_errors(cfg, case_filter, method_filter);
        } else if (cmd_latents->parsed()) {
            run_latents(cfg, case_filter, method_filter);
        } else if (cmd_all->parsed()) {
            if (!method_filter.empty())
                throw ValidationError("all takes no --method filter");
            run_all(cfg, case_filter);
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "morbench: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "morbench: numerical failure: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace mor
