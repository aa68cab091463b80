#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "photherm/equilibrium.hpp"
#include "photherm/jumpmc.hpp"
#include "photherm/motion.hpp"

namespace photherm::io {

inline constexpr const char* artifact_version = "0.1.0";

enum class ExitCode : int { ok = 0, validation = 2, numeric = 3 };

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct GridSpec {
    double min = 0.0;
    double max = 0.0;
    int steps = 0;  // number of points

    std::vector<double> linspace() const;
};

struct SimSettings {
    std::uint64_t seed = 0;
    double duration = 1.0;           // s (trajectory / birth-death span)
    std::size_t particles = 100000;  // Langevin ensemble size
    double dt_over_zeta = 0.01;      // Langevin step in damping times
    std::size_t steps = 2000;        // Langevin steps
    int n_q = 0;                     // photon number held during trajectories
    int trajectories = 1;
    std::optional<double> lambda_up;    // 1/s, birth-death override
    std::optional<double> lambda_down;  // 1/s
    int n_initial = 0;
};

struct Flags {
    bool doppler_neglected_loss = true;
    bool covary_q = false;      // recompute q = omega_q/c along detuning sweeps
    bool numeric_rates = false; // add broadened-delta columns to `rates`
};

// Fully resolved run configuration (presets expanded, SI values).
struct RunConfig {
    AtomSpec atom;
    DriveSpec drive;
    ModeSpec mode;
    double temperature = 0.0;      // K
    bool temperature_doppler = true;
    GridSpec rabi_grid{0.0, 0.0, 0};      // units of Gamma
    GridSpec detuning_grid{0.0, 0.0, 0};  // (omega_l - omega_q)/Gamma
    SimSettings sim;
    Flags flags;
    int threads = 1;
    std::string out_path;
    std::string preset_name;  // informational

    nlohmann::ordered_json resolved_json() const;
};

nlohmann::ordered_json natural_units_json(const RunConfig& config);

RunConfig default_config(const std::string& preset = "fig4");

// Strict parse: unknown keys are rejected with their JSON path; presets are
// expanded and overridden by explicit sections.
RunConfig parse_config_json(const nlohmann::json& j);
RunConfig parse_config(const std::string& path);  // "-" reads stdin
RunConfig parse_config_text(const std::string& text);

struct ResultEnvelope {
    std::string csv_path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // preformatted cells
    nlohmann::ordered_json metadata;             // resolved config + provenance
    std::string jsonl;                           // alternative payload (jump-mc)
    bool payload_is_jsonl = false;
};

// UTF-8, header row, 17 significant digits, newline-terminated; writes the
// metadata sidecar next to the payload as <path>.meta.json.
void emit_csv(const ResultEnvelope& envelope, const std::string& path);

std::string format_number(double v);

ResultEnvelope run_subcommand(const std::string& name, const RunConfig& config);

}  // namespace photherm::io
