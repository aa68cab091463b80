#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "photherm/io.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_path;
    std::string preset;
    std::string atom;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<double> rabi_min, rabi_max;
    std::optional<int> rabi_steps;
    std::optional<double> det_min, det_max;
    std::optional<int> det_steps;
};

photherm::io::RunConfig build_config(const CliOptions& opt) {
    using photherm::io::RunConfig;
    RunConfig config;
    if (!opt.config_path.empty()) {
        config = photherm::io::parse_config(opt.config_path);
        if (!opt.preset.empty())
            throw photherm::io::ConfigError("--preset cannot be combined with --config; "
                                            "set \"preset\" inside the config instead");
    } else {
        config = photherm::io::default_config(opt.preset.empty() ? "fig4" : opt.preset);
    }
    if (!opt.atom.empty()) {
        config.atom = photherm::atom_preset(opt.atom);
        if (config.temperature_doppler)
            config.temperature = photherm::doppler_temperature(config.atom, config.drive);
    }
    if (!opt.out_path.empty()) config.out_path = opt.out_path;
    if (opt.seed) config.sim.seed = *opt.seed;
    if (opt.threads) config.threads = *opt.threads;
    if (opt.rabi_min) config.rabi_grid.min = *opt.rabi_min;
    if (opt.rabi_max) config.rabi_grid.max = *opt.rabi_max;
    if (opt.rabi_steps) config.rabi_grid.steps = *opt.rabi_steps;
    if (opt.det_min) config.detuning_grid.min = *opt.det_min;
    if (opt.det_max) config.detuning_grid.max = *opt.det_max;
    if (opt.det_steps) config.detuning_grid.steps = *opt.det_steps;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"photherm: steady-state photon statistics of laser-cooled atoms"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON run configuration ('-' for stdin)");
    app.add_option("--out", opt.out_path, "output path (CSV or JSONL)");
    app.add_option("--preset", opt.preset, "run preset: fig4 | standard");
    app.add_option("--atom", opt.atom, "atom preset: yb-556 | yb-556-pinned");
    app.add_option("--seed", opt.seed, "master random seed (default 0)");
    app.add_option("--threads", opt.threads, "worker threads for sweeps");

    const std::vector<std::string> subnames = {"rates",   "equilibrium", "phase-diagram",
                                               "jump-mc", "cooling-mc",  "validate"};
    for (const auto& name : subnames) {
        CLI::App* sub = app.add_subcommand(name);
        sub->fallthrough();  // global options may follow the subcommand name
        sub->add_option("--rabi-min", opt.rabi_min, "Rabi grid start (units of Gamma)");
        sub->add_option("--rabi-max", opt.rabi_max, "Rabi grid end (units of Gamma)");
        sub->add_option("--rabi-steps", opt.rabi_steps, "Rabi grid points");
        sub->add_option("--detuning-min", opt.det_min,
                        "(omega_l-omega_q)/Gamma grid start");
        sub->add_option("--detuning-max", opt.det_max,
                        "(omega_l-omega_q)/Gamma grid end");
        sub->add_option("--detuning-steps", opt.det_steps, "detuning grid points");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : static_cast<int>(photherm::io::ExitCode::validation);
    }

    try {
        const photherm::io::RunConfig config = build_config(opt);
        const std::string sub = app.get_subcommands().front()->get_name();
        photherm::io::run_subcommand(sub, config);
        std::cerr << sub << ": wrote " << config.out_path << "\n";
        return static_cast<int>(photherm::io::ExitCode::ok);
    } catch (const photherm::NumericError& e) {
        std::cerr << "numeric error: " << e.what()
                  << " (relative change " << e.achieved_rel_change << " at "
                  << e.nodes_used << " nodes)\n";
        return static_cast<int>(photherm::io::ExitCode::numeric);
    } catch (const photherm::io::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return static_cast<int>(photherm::io::ExitCode::validation);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return static_cast<int>(photherm::io::ExitCode::validation);
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return static_cast<int>(photherm::io::ExitCode::validation);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(photherm::io::ExitCode::numeric);
    }
}
