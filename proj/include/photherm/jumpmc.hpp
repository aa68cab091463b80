#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "photherm/rates.hpp"

// Stochastic validation layer: quantum-jump trajectory sampling of the
// perturbative amplitudes, and a birth-death chain for the photon number.
namespace photherm {

enum class LevelLabel { g0, g_plus_ql, g_minus_ql, e_minus_q };

// State with complex frequency z = omega - i gamma/2; frequencies may be
// given in any common rotating frame (only differences enter amplitudes).
struct ComplexLevel {
    LevelLabel label = LevelLabel::g0;
    double omega = 0.0;  // rad/s
    double gamma = 0.0;  // 1/s

    std::complex<double> z() const { return {omega, -0.5 * gamma}; }
};

// First-order transition amplitude from `initial` to `final_state` after time
// t, with the drive photon contributing laser_sign * omega_l to the initial
// energy (+1 laser absorbed, -1 laser emitted, 0 no laser photon).
std::complex<double> amplitude_f(const ComplexLevel& initial,
                                 const ComplexLevel& final_state, double t,
                                 int laser_sign, double omega_l);

enum class JumpOutcome : int {
    bath_reset = 0,
    emit_system = 1,
    absorb_to_laser = 2,
    absorb_to_bath = 3,
};

struct JumpProbabilities {
    std::array<double, 4> probability{};  // normalized, indexed by JumpOutcome
    std::array<double, 4> weight{};       // unnormalized
    double correction_ratio = 0.0;        // (sum - bath weight)/bath weight
};

// Outcome distribution at the jump time t_j = -ln(r)/gamma(p).
JumpProbabilities jump_outcome_probabilities(const AtomSpec& atom,
                                             const DriveSpec& drive,
                                             const ModeSpec& mode,
                                             const MomentumSample& p, int n_q,
                                             double r);

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    MomentumSample initial_p;
    std::vector<double> jump_times;       // s, strictly increasing
    std::vector<JumpOutcome> outcomes;    // one per jump
    std::vector<double> gamma_at_jump;    // 1/s, ground decay at the jump's p
    std::array<std::uint64_t, 4> counts{};
    double duration = 0.0;                // s, simulated span

    // Estimate of the momentum-averaged emission rate: mean of
    // gamma(p) * [outcome == emit] over jumps, with its standard error.
    std::pair<double, double> emission_rate_estimate() const;
    std::pair<double, double> absorption_rate_estimate() const;
};

// Repeated thermalize-and-jump cycles; the atom momentum is redrawn from the
// Boltzmann distribution after every jump. Deterministic given the seed.
TrajectoryRecord sample_trajectory(const AtomSpec& atom, const DriveSpec& drive,
                                   const ModeSpec& mode, double temperature,
                                   int n_q, double duration, std::uint64_t seed);

// Emission rate per (n_q+1) from the closed-form time integral of |f|^2.
double emission_rate_at(const AtomSpec& atom, const DriveSpec& drive,
                        const ModeSpec& mode, const MomentumSample& p, int n_q);
double absorption_rate_at(const AtomSpec& atom, const DriveSpec& drive,
                          const ModeSpec& mode, const MomentumSample& p, int n_q);

// Momentum-averaged rates. These integrate the time-integral closed form
// against the Boltzmann distribution with an independent quadrature (adaptive
// in the energy direction) and must agree with the broadened-delta forms.
double averaged_emission_rate(const AtomSpec& atom, const DriveSpec& drive,
                              const ModeSpec& mode, double temperature,
                              int n_q = 0,
                              std::optional<MomentumSample> p = std::nullopt);
double averaged_absorption_rate(const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode, double temperature,
                                int n_q = 1,
                                std::optional<MomentumSample> p = std::nullopt);

struct CountsRecord {
    std::uint64_t seed = 0;
    double lambda_up = 0.0;          // 1/s
    double lambda_down = 0.0;        // 1/s
    std::vector<double> dwell;       // seconds spent at each n
    std::uint64_t events = 0;
    std::uint64_t overflow_events = 0;  // excursions beyond the histogram cap
    bool transient_gain = false;
    double total_time = 0.0;

    double mean() const;
    double variance() const;
    // batch-means standard error of the dwell-weighted mean
    double mean_std_error = 0.0;
};

// Exact (Gillespie) simulation of the photon-number birth-death chain with
// up rate (n+1) lambda_up and down rate n lambda_down.
CountsRecord simulate_photon_number(double lambda_up, double lambda_down,
                                    double duration, std::uint64_t seed,
                                    int n_initial = 0);

}  // namespace photherm
