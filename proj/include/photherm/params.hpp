#pragma once

#include <stdexcept>
#include <string>

#include "photherm/constants.hpp"

// Physical parameter types shared by all modules. All public interfaces are
// SI; computations convert to natural units (frequencies in Gamma, momenta in
// hbar*k_L, energies in hbar*Gamma) at entry.
namespace photherm {

struct AtomSpec {
    double mass = 0.0;     // kg
    double omega_a = 0.0;  // rad/s, transition angular frequency
    double gamma = 0.0;    // rad/s, natural linewidth (integrated bath coupling)

    void validate() const;
};

// The laser propagation direction is the reference x axis for all geometry.
struct DriveSpec {
    double omega = 0.0;         // rad/s, half Rabi frequency
    double detuning_bar = 0.0;  // rad/s, recoil-shifted laser detuning
    double k_l = 0.0;           // 1/m, laser wavenumber

    void validate() const;
    // Omega^2 << detuning_bar^2 + Gamma^2/4
    bool low_excitation(const AtomSpec& atom, double threshold = 0.1) const;
};

struct ModeSpec {
    double omega_q = 0.0;  // rad/s, mode angular frequency
    double q = 0.0;        // 1/m, mode wavenumber
    double theta = 0.0;    // rad, angle between k_L and q
    double alpha = 0.0;    // rad/s, half single-photon Rabi coupling
    double kappa = 0.0;    // rad/s, cavity linewidth (>= 0)

    void validate() const;
    // |k_L - q| = sqrt(k_L^2 + q^2 - 2 k_L q cos(theta))
    double momentum_transfer(const DriveSpec& drive) const;
};

enum class Dimension { frequency, momentum, energy, temperature };

Dimension parse_dimension(const std::string& name);
std::string to_string(Dimension d);

// Linear rescaling between SI and natural units.
struct NaturalScale {
    double frequency_unit = 0.0;  // rad/s (Gamma)
    double momentum_unit = 0.0;   // kg m/s (hbar k_L)
    double energy_unit = 0.0;     // J (hbar Gamma)

    static NaturalScale from(const AtomSpec& atom, const DriveSpec& drive);

    double to_natural(double value, Dimension d) const;
    double from_natural(double value, Dimension d) const;
};

// hbar^2 k^2 / (2 m)
double recoil_energy(double k, double mass);

struct ShiftedDetunings {
    double dbar_l = 0.0;  // rad/s
    double dbar_q = 0.0;  // rad/s
};

// dbar_q = omega_q - omega_a - hbar q^2/(2m); dbar_l is the drive field.
ShiftedDetunings shifted_detunings(const AtomSpec& atom, const DriveSpec& drive,
                                   const ModeSpec& mode);

// omega_q - omega_l reconstructed from the shifted detunings.
double mode_detuning_from_laser(const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode);

// A full operating point: atom + drive + mode + motional temperature.
struct OperatingPoint {
    AtomSpec atom;
    DriveSpec drive;
    ModeSpec mode;
    double temperature = 0.0;  // K
};

// Named presets. "yb-556" uses the tabulated 174Yb mass; "fig4" pins the
// recoil E_r/h = 3.74 kHz (mass derived from it) with detuning -157 Gamma;
// "standard" is the same geometry at detuning -Gamma/2, Omega = 0.15 Gamma.
AtomSpec atom_preset(const std::string& name);
OperatingPoint run_preset(const std::string& name);

// Rebuild the mode at a new frequency offset x = (omega_q - omega_l)/Gamma,
// keeping geometry and couplings fixed.
ModeSpec mode_at_offset(const AtomSpec& atom, const DriveSpec& drive,
                        const ModeSpec& base, double omega_rel_gamma);

}  // namespace photherm
