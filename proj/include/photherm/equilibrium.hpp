#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "photherm/rates.hpp"

namespace photherm {

enum class Regime { gce, gain, quasithermal, invalid };

std::string to_string(Regime r);

struct NbarResult {
    double nbar = 0.0;
    bool divergent = false;
};

// Steady-state occupation from the loss-modified balance of emission against
// absorption plus cavity loss. Divergent when emission wins.
NbarResult solve_nbar(const RateSet& rates);

// beta_eff = ln((nbar+1)/nbar) / (hbar omega_q - hbar omega_l + delta_mu).
// Arguments in SI; homega_rel = hbar (omega_q - omega_l) in J.
double effective_temperature_beta(double nbar, double homega_rel, double delta_mu);

// Named validity ratios; each must be small (< threshold) for GCE behavior.
struct ValidityMargins {
    double high_t = 0.0;        // ground-state decay vs Doppler width
    double small_loss = 0.0;    // bath scattering vs laser-mediated exchange
    double chain35_left = 0.0;  // left inequality of the combined chain
    double chain35_right = 0.0; // right inequality of the combined chain
    double excitation = 0.0;    // perturbative drive

    std::map<std::string, double> as_map() const;
    bool all_ok(double threshold = 0.1) const;
};

ValidityMargins validity_margins(const AtomSpec& atom, const DriveSpec& drive,
                                 const ModeSpec& mode, double temperature);

// Solver for the loss-balance equation in the chemical-potential shift and
// for the critical drive strength below which it has no root.
struct DeltaMuResult {
    std::optional<double> delta_mu;        // J, smaller root
    std::optional<double> delta_mu_right;  // J, larger root
    double omega_c = 0.0;                  // rad/s, critical half Rabi frequency
    double g_min = 0.0;                    // minimum of the balance function
    double g_argmin = 0.0;                 // J, its location
};

DeltaMuResult delta_mu_and_critical(const AtomSpec& atom, const DriveSpec& drive,
                                    const ModeSpec& mode_geometry,
                                    double temperature);

struct EquilibriumPoint {
    double omega_rel = 0.0;   // rad/s, omega_l - omega_q (figure convention)
    double rabi = 0.0;        // rad/s, half Rabi frequency
    double nbar = 0.0;        // +inf when divergent
    bool divergent = false;
    double beta_eff = 0.0;    // 1/J
    double delta_mu = 0.0;    // J (NaN below critical drive)
    double t_eff = 0.0;       // K
    double t_o = 0.0;         // K
    Regime regime = Regime::invalid;
    ValidityMargins margins;
    std::string error;        // nonempty for invalid cells
};

// gain if divergent; GCE inside the half-decade band with drive above
// critical; quasithermal otherwise.
Regime classify_regime(const EquilibriumPoint& point, double omega_c);

struct EquilibriumOptions {
    bool doppler_neglected_loss = true;
    double band_low = -0.5;   // log10(T_eff/T_o) lower edge
    double band_high = 0.0;
};

// Single balance-curve point at drive strength rabi (rad/s) and offset
// omega_l_minus_omega_q (rad/s).
EquilibriumPoint equilibrium_point(const AtomSpec& atom, const DriveSpec& drive,
                                   const ModeSpec& mode_geometry, double temperature,
                                   double omega_l_minus_omega_q,
                                   const EquilibriumOptions& opt = {});

struct PhaseDiagram {
    std::vector<double> rabi;       // rad/s grid (rows)
    std::vector<double> omega_rel;  // rad/s grid of omega_l - omega_q (columns)
    std::vector<EquilibriumPoint> cells;  // row-major
    const EquilibriumPoint& at(size_t i, size_t j) const {
        return cells[i * omega_rel.size() + j];
    }
};

// Dense, deterministic sweep; cell errors are recorded, never thrown.
// Temperature follows the drive detuning (Doppler rule) and is fixed per grid.
PhaseDiagram phase_diagram(const AtomSpec& atom, const DriveSpec& drive_family,
                           const ModeSpec& mode_geometry,
                           const std::vector<double>& rabi_grid,
                           const std::vector<double>& omega_rel_grid,
                           int threads = 1, const EquilibriumOptions& opt = {});

// Natural-unit loss-balance internals, exposed for tests and sweeps.
namespace detail {
struct LossBalance {
    double coeff = 0.0;       // loss coefficient of the balance function
    double tau = 0.0;         // k_B T/(hbar Gamma)
    double recoil = 0.0;      // E_r(k_L)/(hbar Gamma)
    double kv = 0.0;          // |k_L - q|/k_L

    // g(x) with x = delta mu/(hbar Gamma) >= 0
    double g(double x) const;
    // sign of g'(x); exact in log space, safe against overflow
    int g_prime_sign(double x) const;
    // balance ratio minus... X(domega) with domega = (omega_q-omega_l)/Gamma
    double balance_ratio(double domega) const;
    double argmin() const;
    double upper_bracket() const;
};

LossBalance make_loss_balance(const ScaledPoint& sp);
}  // namespace detail

}  // namespace photherm
