#include "photherm/io.hpp"

#include "photherm/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace photherm::io {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<double> GridSpec::linspace() const {
    if (steps < 1) throw ConfigError("grid: steps must be >= 1");
    if (steps == 1) return {min};
    if (!(max > min)) throw ConfigError("grid: max must exceed min");
    std::vector<double> out(steps);
    for (int i = 0; i < steps; ++i)
        out[i] = min + (max - min) * static_cast<double>(i) / (steps - 1);
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (allowed.find(it.key()) == allowed.end())
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

double require_positive(double v, const std::string& where) {
    if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
    return v;
}

AtomSpec parse_atom(const json& j) {
    if (j.is_string()) return atom_preset(j.get<std::string>());
    require_keys(j, "atom", {"mass", "omega_a", "gamma"});
    AtomSpec a;
    a.mass = require_positive(j.at("mass").get<double>(), "atom.mass");
    a.omega_a = require_positive(j.at("omega_a").get<double>(), "atom.omega_a");
    a.gamma = require_positive(j.at("gamma").get<double>(), "atom.gamma");
    return a;
}

GridSpec parse_grid(const json& j, const std::string& where) {
    require_keys(j, where, {"min", "max", "steps"});
    GridSpec g;
    g.min = j.at("min").get<double>();
    g.max = j.at("max").get<double>();
    g.steps = j.at("steps").get<int>();
    if (g.steps < 1) throw ConfigError(where + ".steps: must be >= 1");
    return g;
}

}  // namespace

RunConfig default_config(const std::string& preset) {
    RunConfig c;
    const OperatingPoint pt = run_preset(preset);
    c.atom = pt.atom;
    c.drive = pt.drive;
    c.mode = pt.mode;
    c.temperature = pt.temperature;
    c.temperature_doppler = true;
    c.preset_name = preset;
    const double abs_dl = std::abs(pt.drive.detuning_bar) / pt.atom.gamma;
    c.rabi_grid = {0.02 * abs_dl, 0.3 * abs_dl, 50};
    c.detuning_grid = {-4.0, 8.0, 100};
    c.out_path = "out.csv";
    return c;
}

RunConfig parse_config_json(const json& j) {
    require_keys(j, "config",
                 {"preset", "atom", "drive", "mode", "temperature", "grids", "sim",
                  "flags", "threads", "out"});

    RunConfig c = default_config(j.value("preset", std::string("fig4")));
    if (j.contains("preset")) c.preset_name = j.at("preset").get<std::string>();

    if (j.contains("atom")) c.atom = parse_atom(j.at("atom"));
    if (j.contains("drive")) {
        const json& d = j.at("drive");
        require_keys(d, "drive", {"omega", "detuning_bar", "k_l"});
        if (d.contains("omega")) c.drive.omega = d.at("omega").get<double>();
        if (d.contains("detuning_bar"))
            c.drive.detuning_bar = d.at("detuning_bar").get<double>();
        if (d.contains("k_l"))
            c.drive.k_l = require_positive(d.at("k_l").get<double>(), "drive.k_l");
        if (!(c.drive.omega >= 0.0)) throw ConfigError("drive.omega: must be >= 0");
    }
    if (j.contains("mode")) {
        const json& m = j.at("mode");
        require_keys(m, "mode", {"omega_q", "q", "theta", "alpha", "kappa"});
        if (m.contains("omega_q"))
            c.mode.omega_q = require_positive(m.at("omega_q").get<double>(), "mode.omega_q");
        if (m.contains("q")) c.mode.q = m.at("q").get<double>();
        if (m.contains("theta")) c.mode.theta = m.at("theta").get<double>();
        if (m.contains("alpha")) c.mode.alpha = m.at("alpha").get<double>();
        if (m.contains("kappa")) {
            c.mode.kappa = m.at("kappa").get<double>();
            if (c.mode.kappa < 0.0) throw ConfigError("mode.kappa: must be >= 0");
        }
    }
    if (j.contains("temperature")) {
        const json& t = j.at("temperature");
        if (t.is_string()) {
            if (t.get<std::string>() != "doppler")
                throw ConfigError("temperature: expected a number or \"doppler\"");
            c.temperature_doppler = true;
        } else {
            c.temperature = require_positive(t.get<double>(), "temperature");
            c.temperature_doppler = false;
        }
    }
    if (c.temperature_doppler)
        c.temperature = doppler_temperature(c.atom, c.drive);

    if (j.contains("grids")) {
        const json& g = j.at("grids");
        require_keys(g, "grids", {"rabi", "detuning"});
        if (g.contains("rabi")) c.rabi_grid = parse_grid(g.at("rabi"), "grids.rabi");
        if (g.contains("detuning"))
            c.detuning_grid = parse_grid(g.at("detuning"), "grids.detuning");
    }
    if (j.contains("sim")) {
        const json& s = j.at("sim");
        require_keys(s, "sim",
                     {"seed", "duration", "particles", "dt_over_zeta", "steps", "n_q",
                      "trajectories", "lambda_up", "lambda_down", "n_initial"});
        if (s.contains("seed")) c.sim.seed = s.at("seed").get<std::uint64_t>();
        if (s.contains("duration"))
            c.sim.duration = require_positive(s.at("duration").get<double>(), "sim.duration");
        if (s.contains("particles"))
            c.sim.particles = s.at("particles").get<std::size_t>();
        if (s.contains("dt_over_zeta"))
            c.sim.dt_over_zeta =
                require_positive(s.at("dt_over_zeta").get<double>(), "sim.dt_over_zeta");
        if (s.contains("steps")) c.sim.steps = s.at("steps").get<std::size_t>();
        if (s.contains("n_q")) {
            c.sim.n_q = s.at("n_q").get<int>();
            if (c.sim.n_q < 0) throw ConfigError("sim.n_q: must be >= 0");
        }
        if (s.contains("trajectories")) {
            c.sim.trajectories = s.at("trajectories").get<int>();
            if (c.sim.trajectories < 1) throw ConfigError("sim.trajectories: must be >= 1");
        }
        if (s.contains("lambda_up"))
            c.sim.lambda_up = require_positive(s.at("lambda_up").get<double>(), "sim.lambda_up");
        if (s.contains("lambda_down"))
            c.sim.lambda_down =
                require_positive(s.at("lambda_down").get<double>(), "sim.lambda_down");
        if (s.contains("n_initial")) {
            c.sim.n_initial = s.at("n_initial").get<int>();
            if (c.sim.n_initial < 0) throw ConfigError("sim.n_initial: must be >= 0");
        }
    }
    if (j.contains("flags")) {
        const json& f = j.at("flags");
        require_keys(f, "flags", {"doppler_neglected_loss", "covary_q", "numeric_rates"});
        if (f.contains("doppler_neglected_loss"))
            c.flags.doppler_neglected_loss = f.at("doppler_neglected_loss").get<bool>();
        if (f.contains("covary_q")) c.flags.covary_q = f.at("covary_q").get<bool>();
        if (f.contains("numeric_rates"))
            c.flags.numeric_rates = f.at("numeric_rates").get<bool>();
    }
    if (j.contains("threads")) {
        c.threads = j.at("threads").get<int>();
        if (c.threads < 1) throw ConfigError("threads: must be >= 1");
    }
    if (j.contains("out")) c.out_path = j.at("out").get<std::string>();

    c.atom.validate();
    c.drive.validate();
    c.mode.validate();
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        return parse_config_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config schema error: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config validation error: ") + e.what());
    }
}

RunConfig parse_config(const std::string& path) {
    if (path == "-") {
        std::stringstream ss;
        ss << std::cin.rdbuf();
        return parse_config_text(ss.str());
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

ordered_json RunConfig::resolved_json() const {
    // mirrors the input schema exactly, so parsing it back is the identity
    ordered_json j;
    j["preset"] = preset_name;
    j["atom"] = {{"mass", atom.mass}, {"omega_a", atom.omega_a}, {"gamma", atom.gamma}};
    j["drive"] = {{"omega", drive.omega},
                  {"detuning_bar", drive.detuning_bar},
                  {"k_l", drive.k_l}};
    j["mode"] = {{"omega_q", mode.omega_q},
                 {"q", mode.q},
                 {"theta", mode.theta},
                 {"alpha", mode.alpha},
                 {"kappa", mode.kappa}};
    if (temperature_doppler)
        j["temperature"] = "doppler";
    else
        j["temperature"] = temperature;
    j["grids"] = {{"rabi",
                   {{"min", rabi_grid.min}, {"max", rabi_grid.max}, {"steps", rabi_grid.steps}}},
                  {"detuning",
                   {{"min", detuning_grid.min},
                    {"max", detuning_grid.max},
                    {"steps", detuning_grid.steps}}}};
    ordered_json sim_j = {{"seed", sim.seed},
                          {"duration", sim.duration},
                          {"particles", sim.particles},
                          {"dt_over_zeta", sim.dt_over_zeta},
                          {"steps", sim.steps},
                          {"n_q", sim.n_q},
                          {"trajectories", sim.trajectories},
                          {"n_initial", sim.n_initial}};
    if (sim.lambda_up) sim_j["lambda_up"] = *sim.lambda_up;
    if (sim.lambda_down) sim_j["lambda_down"] = *sim.lambda_down;
    j["sim"] = sim_j;
    j["flags"] = {{"doppler_neglected_loss", flags.doppler_neglected_loss},
                  {"covary_q", flags.covary_q},
                  {"numeric_rates", flags.numeric_rates}};
    j["threads"] = threads;
    j["out"] = out_path;
    return j;
}

ordered_json natural_units_json(const RunConfig& c) {
    const NaturalScale ns = NaturalScale::from(c.atom, c.drive);
    return {{"detuning_bar_gamma",
             ns.to_natural(c.drive.detuning_bar, Dimension::frequency)},
            {"omega_gamma", ns.to_natural(c.drive.omega, Dimension::frequency)},
            {"alpha_gamma", ns.to_natural(c.mode.alpha, Dimension::frequency)},
            {"recoil_energy_hbar_gamma",
             recoil_energy(c.drive.k_l, c.atom.mass) / ns.energy_unit},
            {"kbt_hbar_gamma", ns.to_natural(c.temperature, Dimension::temperature)}};
}

void emit_csv(const ResultEnvelope& envelope, const std::string& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write output file: " + path);
        if (envelope.payload_is_jsonl) {
            out << envelope.jsonl;
        } else {
            for (size_t i = 0; i < envelope.header.size(); ++i) {
                if (i) out << ',';
                out << envelope.header[i];
            }
            out << '\n';
            for (const auto& row : envelope.rows) {
                for (size_t i = 0; i < row.size(); ++i) {
                    if (i) out << ',';
                    out << row[i];
                }
                out << '\n';
            }
        }
    }
    std::ofstream meta(path + ".meta.json", std::ios::binary);
    if (!meta) throw std::runtime_error("cannot write metadata sidecar for: " + path);
    meta << envelope.metadata.dump(2) << '\n';
}

namespace {

ordered_json make_metadata(const RunConfig& c, const std::string& subcommand) {
    ordered_json meta;
    meta["artifact_version"] = artifact_version;
    meta["subcommand"] = subcommand;
    meta["seed"] = c.sim.seed;
    meta["config"] = c.resolved_json();
    meta["wall_time_s"] = 0.0;  // filled by run_subcommand
    return meta;
}

ModeSpec mode_for_offset(const RunConfig& c, double omega_rel_gamma) {
    ModeSpec m = mode_at_offset(c.atom, c.drive, c.mode, omega_rel_gamma);
    if (c.flags.covary_q) m.q = m.omega_q / constants::speed_of_light;
    return m;
}

ResultEnvelope run_rates(const RunConfig& c) {
    ResultEnvelope env;
    env.header = {"omega_rel",      "lambda_plus_l", "lambda_minus_l",
                  "lambda_minus_b", "kappa_q",       "p0",
                  "p0_prime",       "temperature"};
    if (c.flags.numeric_rates) {
        env.header.push_back("lambda_plus_numeric");
        env.header.push_back("lambda_minus_numeric");
    }
    for (double nu : c.detuning_grid.linspace()) {
        // grid value is (omega_l - omega_q)/Gamma; mode offset is its negative
        const ModeSpec m = mode_for_offset(c, -nu);
        const RateSet rs = assemble_rates(c.atom, c.drive, m, c.temperature,
                                          {c.flags.doppler_neglected_loss});
        std::vector<std::string> row{format_number(nu * c.atom.gamma),
                                     format_number(rs.lambda_plus_l),
                                     format_number(rs.lambda_minus_l),
                                     format_number(rs.lambda_minus_b),
                                     format_number(rs.kappa_q), format_number(rs.p0),
                                     format_number(rs.p0_prime),
                                     format_number(rs.temperature)};
        if (c.flags.numeric_rates) {
            row.push_back(format_number(
                lambda_plus_numeric(c.atom, c.drive, m, c.temperature)));
            row.push_back(format_number(
                lambda_minus_numeric(c.atom, c.drive, m, c.temperature)));
        }
        env.rows.push_back(std::move(row));
    }
    return env;
}

ResultEnvelope run_equilibrium(const RunConfig& c) {
    ResultEnvelope env;
    env.header = {"omega_rel", "rabi", "nbar",    "beta_eff",
                  "t_eff",     "t_o",  "delta_mu", "regime"};
    const EquilibriumOptions opt{c.flags.doppler_neglected_loss, -0.5, 0.0};
    for (double nu : c.detuning_grid.linspace()) {
        const ModeSpec geom = c.flags.covary_q ? mode_for_offset(c, -nu) : c.mode;
        const EquilibriumPoint pt = equilibrium_point(
            c.atom, c.drive, geom, c.temperature, nu * c.atom.gamma, opt);
        env.rows.push_back({format_number(pt.omega_rel), format_number(pt.rabi),
                            format_number(pt.nbar), format_number(pt.beta_eff),
                            format_number(pt.t_eff), format_number(pt.t_o),
                            format_number(pt.delta_mu), to_string(pt.regime)});
    }
    return env;
}

ResultEnvelope run_phase_diagram(const RunConfig& c) {
    ResultEnvelope env;
    env.header = {"omega_rel",      "rabi",
                  "nbar",           "t_eff_ratio",
                  "regime",         "margin_high_t",
                  "margin_small_loss", "margin_chain35_left",
                  "margin_chain35_right", "margin_excitation"};
    std::vector<double> rabi;
    for (double r : c.rabi_grid.linspace()) rabi.push_back(r * c.atom.gamma);
    std::vector<double> omega_rel;
    for (double nu : c.detuning_grid.linspace()) omega_rel.push_back(nu * c.atom.gamma);

    const EquilibriumOptions opt{c.flags.doppler_neglected_loss, -0.5, 0.0};
    const PhaseDiagram pd = phase_diagram(c.atom, c.drive, c.mode, rabi, omega_rel,
                                          c.threads, opt);
    for (size_t i = 0; i < pd.rabi.size(); ++i) {
        for (size_t j = 0; j < pd.omega_rel.size(); ++j) {
            const EquilibriumPoint& cell = pd.at(i, j);
            const double ratio = cell.t_eff / cell.t_o;
            env.rows.push_back({format_number(cell.omega_rel), format_number(cell.rabi),
                                format_number(cell.nbar), format_number(ratio),
                                to_string(cell.regime),
                                format_number(cell.margins.high_t),
                                format_number(cell.margins.small_loss),
                                format_number(cell.margins.chain35_left),
                                format_number(cell.margins.chain35_right),
                                format_number(cell.margins.excitation)});
        }
    }
    return env;
}

ResultEnvelope run_jump_mc(const RunConfig& c) {
    ResultEnvelope env;
    env.payload_is_jsonl = true;
    std::ostringstream out;
    for (int k = 0; k < c.sim.trajectories; ++k) {
        const std::uint64_t seed = rng::SplitMix64(c.sim.seed ^ (k + 1)).next();
        const TrajectoryRecord rec =
            sample_trajectory(c.atom, c.drive, c.mode, c.temperature, c.sim.n_q,
                              c.sim.duration, seed);
        const auto [rate, se] = rec.emission_rate_estimate();
        ordered_json j;
        j["type"] = "trajectory";
        j["seed"] = rec.seed;
        j["duration"] = rec.duration;
        j["n_jumps"] = rec.outcomes.size();
        j["counts"] = {{"bath_reset", rec.counts[0]},
                       {"emit_system", rec.counts[1]},
                       {"absorb_to_laser", rec.counts[2]},
                       {"absorb_to_bath", rec.counts[3]}};
        j["initial_p"] = {rec.initial_p.p[0], rec.initial_p.p[1], rec.initial_p.p[2]};
        j["emission_rate_estimate"] = rate;
        j["emission_rate_std_error"] = se;
        j["jump_times"] = rec.jump_times;
        std::vector<int> outcome_codes(rec.outcomes.size());
        for (size_t i = 0; i < rec.outcomes.size(); ++i)
            outcome_codes[i] = static_cast<int>(rec.outcomes[i]);
        j["outcomes"] = outcome_codes;
        out << j.dump() << '\n';
    }
    if (c.sim.lambda_up && c.sim.lambda_down) {
        const CountsRecord counts =
            simulate_photon_number(*c.sim.lambda_up, *c.sim.lambda_down,
                                   c.sim.duration, c.sim.seed, c.sim.n_initial);
        ordered_json j;
        j["type"] = "counts";
        j["seed"] = counts.seed;
        j["lambda_up"] = counts.lambda_up;
        j["lambda_down"] = counts.lambda_down;
        j["events"] = counts.events;
        j["overflow_events"] = counts.overflow_events;
        j["transient_gain"] = counts.transient_gain;
        j["mean"] = counts.mean();
        j["variance"] = counts.variance();
        j["mean_std_error"] = counts.mean_std_error;
        j["dwell"] = counts.dwell;
        out << j.dump() << '\n';
    }
    env.jsonl = out.str();
    return env;
}

ResultEnvelope run_cooling_mc(const RunConfig& c) {
    ResultEnvelope env;
    const CoolingCoefficients coeffs = cooling_coefficients(c.atom, c.drive);
    if (coeffs.heating)
        throw ConfigError("cooling-mc: drive does not cool (blue detuning or zero power)");
    const double dt = c.sim.dt_over_zeta / coeffs.zeta;
    const MotionEnsemble ens =
        langevin_simulate(coeffs, /*drift_compensated=*/true, c.sim.particles, dt,
                          c.sim.steps, c.sim.seed, c.threads);
    const EquilibriumStats stats = equilibrium_check(ens, c.atom.mass, coeffs.temperature);

    const double sigma = std::sqrt(c.atom.mass * constants::k_boltzmann *
                                   coeffs.temperature);
    const int nbins = 81;
    const double lo = -5.0 * sigma, hi = 5.0 * sigma;
    std::vector<std::size_t> hist(nbins, 0);
    for (double p : ens.momenta) {
        const int b = static_cast<int>((p - lo) / (hi - lo) * nbins);
        if (b >= 0 && b < nbins) hist[b] += 1;
    }
    env.header = {"bin_center", "count", "density"};
    const double width = (hi - lo) / nbins;
    for (int b = 0; b < nbins; ++b) {
        const double center = lo + (b + 0.5) * width;
        const double density = hist[b] / (width * ens.momenta.size());
        env.rows.push_back({format_number(center),
                            std::to_string(hist[b]),
                            format_number(density)});
    }
    env.metadata["stats"] = {{"ks_statistic", stats.ks_statistic},
                             {"ks_pvalue", stats.ks_pvalue},
                             {"mean", stats.mean},
                             {"second_moment_ratio", stats.second_moment_ratio},
                             {"kurtosis", stats.kurtosis},
                             {"zeta", coeffs.zeta},
                             {"f0", coeffs.f0},
                             {"diffusion", coeffs.diffusion},
                             {"temperature", coeffs.temperature}};
    return env;
}

ResultEnvelope run_validate(const RunConfig& c) {
    ResultEnvelope env;
    const ValidityMargins m = validity_margins(c.atom, c.drive, c.mode, c.temperature);
    const DeltaMuResult dm =
        delta_mu_and_critical(c.atom, c.drive, c.mode, c.temperature);
    const bool gce_feasible = m.all_ok() && c.drive.omega >= dm.omega_c;

    env.header = {"omega_c",
                  "omega_c_over_abs_detuning",
                  "delta_mu",
                  "margin_high_t",
                  "margin_small_loss",
                  "margin_chain35_left",
                  "margin_chain35_right",
                  "margin_excitation",
                  "low_excitation",
                  "gce_feasible"};
    env.rows.push_back(
        {format_number(dm.omega_c),
         format_number(dm.omega_c / std::abs(c.drive.detuning_bar)),
         format_number(dm.delta_mu ? *dm.delta_mu
                                   : std::numeric_limits<double>::quiet_NaN()),
         format_number(m.high_t), format_number(m.small_loss),
         format_number(m.chain35_left), format_number(m.chain35_right),
         format_number(m.excitation),
         c.drive.low_excitation(c.atom) ? "true" : "false",
         gce_feasible ? "true" : "false"});

    std::cerr << "validate: gce_feasible=" << (gce_feasible ? "true" : "false")
              << " omega_c/|detuning|="
              << format_number(dm.omega_c / std::abs(c.drive.detuning_bar)) << "\n";
    for (const auto& [name, value] : m.as_map())
        std::cerr << "  margin " << name << " = " << format_number(value)
                  << (value < 0.1 ? " (ok)" : " (violated)") << "\n";
    return env;
}

}  // namespace

ResultEnvelope run_subcommand(const std::string& name, const RunConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    ResultEnvelope env;
    if (name == "rates") {
        env = run_rates(config);
    } else if (name == "equilibrium") {
        env = run_equilibrium(config);
    } else if (name == "phase-diagram") {
        env = run_phase_diagram(config);
    } else if (name == "jump-mc") {
        env = run_jump_mc(config);
    } else if (name == "cooling-mc") {
        env = run_cooling_mc(config);
    } else if (name == "validate") {
        env = run_validate(config);
    } else {
        throw ConfigError("unknown subcommand: " + name);
    }
    ordered_json meta = make_metadata(config, name);
    meta["natural_units"] = natural_units_json(config);
    if (env.metadata.contains("stats")) meta["stats"] = env.metadata["stats"];
    const auto t1 = std::chrono::steady_clock::now();
    meta["wall_time_s"] = std::chrono::duration<double>(t1 - t0).count();
    env.metadata = meta;
    if (!config.out_path.empty()) emit_csv(env, config.out_path);
    return env;
}

}  // namespace photherm::io
