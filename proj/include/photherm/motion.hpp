#pragma once

#include <cstdint>
#include <vector>

#include "photherm/rates.hpp"

// Doppler-cooling model along the drive axis: drift/damping/diffusion
// coefficients and a semiclassical Langevin integrator whose stationary state
// is the Boltzmann distribution assumed by the rate theory.
namespace photherm {

struct CoolingCoefficients {
    double f0 = 0.0;         // N, dc scattering force
    double zeta = 0.0;       // 1/s, momentum damping (negative means heating)
    double diffusion = 0.0;  // kg^2 m^2 / s^3, = 2 m zeta k_B T
    double temperature = 0.0;  // K
    bool heating = false;    // blue detuning, no stationary state
};

CoolingCoefficients cooling_coefficients(const AtomSpec& atom, const DriveSpec& drive);

struct MotionEnsemble {
    std::vector<double> momenta;  // kg m/s
    double time = 0.0;            // s
    std::uint64_t seed = 0;
};

// Euler-Maruyama for dp = (f0 [uncompensated] - zeta p) dt + sqrt(D) dW.
// Requires zeta dt < 0.1.
MotionEnsemble langevin_simulate(const CoolingCoefficients& coeffs,
                                 bool drift_compensated, std::size_t n_particles,
                                 double dt, std::size_t steps, std::uint64_t seed,
                                 int threads = 1);

struct JumpRateRow {
    double p = 0.0;             // kg m/s along the drive axis
    double gamma_ground = 0.0;  // 1/s, summed ground-state jump rate
    double gamma_excited = 0.0; // 1/s, summed excited-state jump rate (= Gamma)
};

// Totals of the momentum-resolved jump rates; the summed ground-state rate
// must match the dissipation rate used by the rate kernel.
std::vector<JumpRateRow> jump_rate_tables(const AtomSpec& atom,
                                          const DriveSpec& drive,
                                          const std::vector<double>& p_grid);

struct EquilibriumStats {
    double ks_statistic = 0.0;
    double ks_pvalue = 0.0;
    double mean = 0.0;               // kg m/s
    double second_moment_ratio = 0.0;  // <p^2>/(m k_B T)
    double kurtosis = 0.0;
    std::size_t n = 0;
};

// Kolmogorov-Smirnov comparison of the ensemble against the zero-mean
// Gaussian with variance m k_B T, plus moment diagnostics.
EquilibriumStats equilibrium_check(const MotionEnsemble& ensemble, double mass,
                                   double temperature);

}  // namespace photherm
