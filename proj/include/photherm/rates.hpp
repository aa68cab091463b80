#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "photherm/params.hpp"

namespace photherm {

// Raised when a quadrature fails to reach its relative tolerance.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved, int nodes)
        : std::runtime_error(what), achieved_rel_change(achieved), nodes_used(nodes) {}
    double achieved_rel_change = 0.0;
    int nodes_used = 0;
};

// Atomic momentum; the drive direction is the x axis, the mode wavevector
// lies in the xy plane at angle theta.
struct MomentumSample {
    std::array<double, 3> p{0.0, 0.0, 0.0};  // kg m/s
};

struct RateSet {
    double lambda_plus_l = 0.0;   // 1/s
    double lambda_minus_l = 0.0;  // 1/s
    double lambda_minus_b = 0.0;  // 1/s
    double kappa_q = 0.0;         // 1/s
    double p0 = 0.0;              // kg m/s
    double p0_prime = 0.0;        // kg m/s
    double temperature = 0.0;     // K
    double omega_rel = 0.0;       // rad/s, omega_q - omega_l used internally
};

// Everything in natural units: frequencies and rates in Gamma, momenta in
// hbar k_L, energies in hbar Gamma. Built once per (atom, drive, mode, T).
struct ScaledPoint {
    double dbar_l = 0.0;     // laser detuning
    double dbar_q = 0.0;     // mode detuning
    double domega = 0.0;     // omega_q - omega_l
    double omega = 0.0;      // half Rabi frequency
    double alpha = 0.0;      // mode coupling
    double kappa_cav = 0.0;  // cavity linewidth
    double recoil = 0.0;     // E_r(k_L)/(hbar Gamma)
    double tau = 0.0;        // k_B T/(hbar Gamma)
    double q_rel = 0.0;      // q/k_L
    double cos_theta = 0.0;
    double kv = 0.0;         // |k_L - q|/k_L
    double n_dot_kl = 0.0;   // n_hat . kl_hat
    double n_dot_q = 0.0;    // n_hat . q_vec / k_L
    double n_y = 0.0;        // signed transverse component of n_hat
    double sigma_p = 0.0;    // sqrt(m k_B T)/(hbar k_L)

    double doppler(double p_along_axis) const { return 2.0 * recoil * p_along_axis; }
    double gamma_ground(double p_along_kl) const;
    double p0() const { return -domega / (2.0 * recoil * kv) - 0.5 * kv; }
    double p0_prime() const { return -domega / (2.0 * recoil * kv) + 0.5 * kv; }
};

ScaledPoint make_scaled_point(const AtomSpec& atom, const DriveSpec& drive,
                              const ModeSpec& mode, double temperature);
ScaledPoint make_scaled_point(const OperatingPoint& pt);

// Total laser-bath scattering rate of a ground-state atom at momentum p.
double gamma_ground(const MomentumSample& p, const AtomSpec& atom,
                    const DriveSpec& drive);

// Doppler temperature k_B T = (hbar/2)(dbar_l^2 + Gamma^2/4)/|dbar_l|;
// requires red detuning.
double doppler_temperature(const AtomSpec& atom, const DriveSpec& drive);

// Decay of the excited state into the listed cavity modes.
double gamma_a_total(const AtomSpec& atom, const std::vector<ModeSpec>& modes,
                     const MomentumSample& p);

enum class CouplingKind { laser_to_mode, mode_to_laser };

// Effective two-photon couplings R+ (laser absorbed, mode photon emitted) and
// R- (mode photon absorbed, laser photon emitted).
std::complex<double> coupling_r(CouplingKind kind, const MomentumSample& p,
                                const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode);

// Normalized Lorentzian of the given full width; units 1/[omega].
double broadened_delta(double omega, double width);

struct QuadratureOptions {
    int initial_nodes = 80;
    int max_nodes = 640;
    double rel_tol = 1e-4;
    double width_scale = 1.0;  // diagnostic scaling of the lifetime broadening
};

// Momentum-averaged emission rate with the decay-broadened energy delta.
// The average over momentum reduces to a 1D Gauss-Hermite sweep along the
// drive axis with the energy direction folded in analytically (Voigt).
double lambda_plus_numeric(const AtomSpec& atom, const DriveSpec& drive,
                           const ModeSpec& mode, double temperature,
                           const QuadratureOptions& opt = {});

// Absorption analogue; the coupling varies along the mode axis so the energy
// direction is integrated adaptively instead.
double lambda_minus_numeric(const AtomSpec& atom, const DriveSpec& drive,
                            const ModeSpec& mode, double temperature,
                            const QuadratureOptions& opt = {});

// High-temperature closed forms (sharp energy conservation).
double lambda_plus_closed(const AtomSpec& atom, const DriveSpec& drive,
                          const ModeSpec& mode, double temperature);
double lambda_minus_closed(const AtomSpec& atom, const DriveSpec& drive,
                           const ModeSpec& mode, double temperature);

struct BathLossRates {
    double integrated = 0.0;   // Boltzmann-averaged Lorentzian
    double approximate = 0.0;  // Doppler shift neglected
};

BathLossRates lambda_minus_bath(const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode, double temperature);

struct AssembleOptions {
    bool doppler_neglected_loss = true;  // use the approximate bath-loss form
};

RateSet assemble_rates(const AtomSpec& atom, const DriveSpec& drive,
                       const ModeSpec& mode, double temperature,
                       const AssembleOptions& opt = {});

// Natural-unit cores used by the SI wrappers above and by sweep code.
namespace detail {
double lambda_plus_closed_core(const ScaledPoint& sp);
double lambda_minus_closed_core(const ScaledPoint& sp);
double lambda_minus_bath_approx_core(const ScaledPoint& sp);
double lambda_minus_bath_integrated_core(const ScaledPoint& sp);
double lambda_plus_numeric_core(const ScaledPoint& sp, const QuadratureOptions& opt);
double lambda_minus_numeric_core(const ScaledPoint& sp, const QuadratureOptions& opt);
}  // namespace detail

}  // namespace photherm
