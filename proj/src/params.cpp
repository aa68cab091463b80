#include "photherm/params.hpp"

#include <cmath>

namespace photherm {

namespace {
constexpr double yb174_mass = 173.9388664 * constants::atomic_mass_unit;
constexpr double yb_omega_a = constants::two_pi * 539e12;     // rad/s
constexpr double yb_gamma = constants::two_pi * 180e3;        // rad/s
constexpr double yb_recoil_hz = 3740.0;                       // E_r(k_L)/h
}  // namespace

void AtomSpec::validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("AtomSpec: mass must be positive");
    if (!(omega_a > 0.0)) throw std::invalid_argument("AtomSpec: omega_a must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("AtomSpec: gamma must be positive");
}

void DriveSpec::validate() const {
    if (!(omega >= 0.0)) throw std::invalid_argument("DriveSpec: omega must be >= 0");
    if (!(k_l > 0.0)) throw std::invalid_argument("DriveSpec: k_l must be positive");
    if (!std::isfinite(detuning_bar))
        throw std::invalid_argument("DriveSpec: detuning_bar must be finite");
}

bool DriveSpec::low_excitation(const AtomSpec& atom, double threshold) const {
    const double denom = detuning_bar * detuning_bar + 0.25 * atom.gamma * atom.gamma;
    return omega * omega < threshold * threshold * denom;
}

void ModeSpec::validate() const {
    if (!(omega_q > 0.0)) throw std::invalid_argument("ModeSpec: omega_q must be positive");
    if (!(q >= 0.0)) throw std::invalid_argument("ModeSpec: q must be >= 0");
    if (!(theta >= 0.0 && theta <= constants::pi))
        throw std::invalid_argument("ModeSpec: theta must lie in [0, pi]");
    if (!(kappa >= 0.0)) throw std::invalid_argument("ModeSpec: kappa must be >= 0");
}

double ModeSpec::momentum_transfer(const DriveSpec& drive) const {
    const double kl = drive.k_l;
    return std::sqrt(kl * kl + q * q - 2.0 * kl * q * std::cos(theta));
}

Dimension parse_dimension(const std::string& name) {
    if (name == "frequency") return Dimension::frequency;
    if (name == "momentum") return Dimension::momentum;
    if (name == "energy") return Dimension::energy;
    if (name == "temperature") return Dimension::temperature;
    throw std::invalid_argument("unknown dimension: " + name);
}

std::string to_string(Dimension d) {
    switch (d) {
        case Dimension::frequency: return "frequency";
        case Dimension::momentum: return "momentum";
        case Dimension::energy: return "energy";
        case Dimension::temperature: return "temperature";
    }
    throw std::invalid_argument("unknown dimension");
}

NaturalScale NaturalScale::from(const AtomSpec& atom, const DriveSpec& drive) {
    atom.validate();
    drive.validate();
    NaturalScale s;
    s.frequency_unit = atom.gamma;
    s.momentum_unit = constants::hbar * drive.k_l;
    s.energy_unit = constants::hbar * atom.gamma;
    return s;
}

double NaturalScale::to_natural(double value, Dimension d) const {
    switch (d) {
        case Dimension::frequency: return value / frequency_unit;
        case Dimension::momentum: return value / momentum_unit;
        case Dimension::energy: return value / energy_unit;
        // temperature maps to k_B T in energy units
        case Dimension::temperature: return value * constants::k_boltzmann / energy_unit;
    }
    throw std::invalid_argument("unknown dimension");
}

double NaturalScale::from_natural(double value, Dimension d) const {
    switch (d) {
        case Dimension::frequency: return value * frequency_unit;
        case Dimension::momentum: return value * momentum_unit;
        case Dimension::energy: return value * energy_unit;
        case Dimension::temperature: return value * energy_unit / constants::k_boltzmann;
    }
    throw std::invalid_argument("unknown dimension");
}

double recoil_energy(double k, double mass) {
    if (!(mass > 0.0)) throw std::domain_error("recoil_energy: mass must be positive");
    if (!(k >= 0.0)) throw std::domain_error("recoil_energy: wavenumber must be >= 0");
    const double hk = constants::hbar * k;
    return hk * hk / (2.0 * mass);
}

ShiftedDetunings shifted_detunings(const AtomSpec& atom, const DriveSpec& drive,
                                   const ModeSpec& mode) {
    ShiftedDetunings out;
    out.dbar_l = drive.detuning_bar;
    out.dbar_q = mode.omega_q - atom.omega_a -
                 recoil_energy(mode.q, atom.mass) / constants::hbar;
    return out;
}

double mode_detuning_from_laser(const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode) {
    const ShiftedDetunings d = shifted_detunings(atom, drive, mode);
    const double er_l = recoil_energy(drive.k_l, atom.mass) / constants::hbar;
    const double er_q = recoil_energy(mode.q, atom.mass) / constants::hbar;
    return (d.dbar_q - d.dbar_l) - er_l + er_q;
}

AtomSpec atom_preset(const std::string& name) {
    if (name == "yb-556") {
        return AtomSpec{yb174_mass, yb_omega_a, yb_gamma};
    }
    if (name == "yb-556-pinned") {
        // Mass chosen so E_r(k_L)/h is exactly the quoted 3.74 kHz.
        const double kl = yb_omega_a / constants::speed_of_light;
        const double er = constants::planck * yb_recoil_hz;
        const double hk = constants::hbar * kl;
        return AtomSpec{hk * hk / (2.0 * er), yb_omega_a, yb_gamma};
    }
    throw std::invalid_argument("unknown atom preset: " + name);
}

namespace {
OperatingPoint yb_point(double detuning_gamma, double omega_gamma) {
    OperatingPoint pt;
    pt.atom = atom_preset("yb-556-pinned");
    const double g = pt.atom.gamma;
    pt.drive.detuning_bar = detuning_gamma * g;
    pt.drive.omega = omega_gamma * g;
    pt.drive.k_l = pt.atom.omega_a / constants::speed_of_light;

    // |k_L - q| = sqrt(2) k_L: mode wavenumber equal to k_L at right angle.
    pt.mode.q = pt.drive.k_l;
    pt.mode.theta = 0.5 * constants::pi;
    pt.mode.alpha = 0.01 * g;
    pt.mode.kappa = 0.0;
    const double omega_l = pt.atom.omega_a + pt.drive.detuning_bar +
                           recoil_energy(pt.drive.k_l, pt.atom.mass) / constants::hbar;
    pt.mode.omega_q = omega_l;  // swept by callers via mode_at_offset

    const double dbl = pt.drive.detuning_bar;
    pt.temperature = 0.5 * constants::hbar * (dbl * dbl + 0.25 * g * g) /
                     (std::abs(dbl) * constants::k_boltzmann);
    return pt;
}
}  // namespace

OperatingPoint run_preset(const std::string& name) {
    if (name == "fig4") return yb_point(-157.0, 15.7);
    if (name == "standard") return yb_point(-0.5, 0.15);
    throw std::invalid_argument("unknown run preset: " + name);
}

ModeSpec mode_at_offset(const AtomSpec& atom, const DriveSpec& drive,
                        const ModeSpec& base, double omega_rel_gamma) {
    const double omega_l = atom.omega_a + drive.detuning_bar +
                           recoil_energy(drive.k_l, atom.mass) / constants::hbar;
    ModeSpec m = base;
    m.omega_q = omega_l + omega_rel_gamma * atom.gamma;
    return m;
}

}  // namespace photherm
