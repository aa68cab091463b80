#include "photherm/motion.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "photherm/rng.hpp"

namespace photherm {

using constants::hbar;
using constants::k_boltzmann;

CoolingCoefficients cooling_coefficients(const AtomSpec& atom, const DriveSpec& drive) {
    atom.validate();
    drive.validate();
    const double g = atom.gamma;
    const double d = drive.detuning_bar;
    const double lorentz = d * d + 0.25 * g * g;
    CoolingCoefficients c;
    c.f0 = hbar * drive.k_l * drive.omega * drive.omega * g / lorentz;
    // odd in the detuning; positive (cooling) only for red detuning
    c.zeta = -hbar * drive.omega * drive.omega * g * d * drive.k_l * drive.k_l /
             (lorentz * lorentz * atom.mass);
    c.heating = !(c.zeta > 0.0) || drive.omega == 0.0;
    if (d < 0.0) {
        c.temperature = 0.5 * hbar * lorentz / (std::abs(d) * k_boltzmann);
        c.diffusion = 2.0 * atom.mass * c.zeta * k_boltzmann * c.temperature;
    } else {
        c.temperature = 0.0;
        c.diffusion = 0.0;
    }
    return c;
}

MotionEnsemble langevin_simulate(const CoolingCoefficients& coeffs,
                                 bool drift_compensated, std::size_t n_particles,
                                 double dt, std::size_t steps, std::uint64_t seed,
                                 int threads) {
    if (!(dt > 0.0) || n_particles == 0)
        throw std::invalid_argument("langevin_simulate: need dt > 0 and particles > 0");
    if (coeffs.zeta > 0.0 && !(coeffs.zeta * dt < 0.1))
        throw std::invalid_argument("langevin_simulate: unstable step, require zeta*dt < 0.1");

    MotionEnsemble out;
    out.seed = seed;
    out.time = dt * steps;
    out.momenta.assign(n_particles, 0.0);

    const double drift = drift_compensated ? 0.0 : coeffs.f0;
    const double noise = std::sqrt(std::max(0.0, coeffs.diffusion) * dt);

    auto evolve_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            rng::Stream stream(seed, i);  // per-particle stream, thread-agnostic
            double p = 0.0;
            for (std::size_t s = 0; s < steps; ++s) {
                p += (drift - coeffs.zeta * p) * dt + noise * stream.normal();
            }
            out.momenta[i] = p;
        }
    };

    const int nthreads = std::max(1, std::min<int>(threads, n_particles));
    if (nthreads == 1) {
        evolve_range(0, n_particles);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_particles + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(n_particles, b + chunk);
            if (b < e) pool.emplace_back(evolve_range, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

std::vector<JumpRateRow> jump_rate_tables(const AtomSpec& atom,
                                          const DriveSpec& drive,
                                          const std::vector<double>& p_grid) {
    std::vector<JumpRateRow> table;
    table.reserve(p_grid.size());
    for (double p : p_grid) {
        JumpRateRow row;
        row.p = p;
        row.gamma_ground = gamma_ground(MomentumSample{{p, 0.0, 0.0}}, atom, drive);
        row.gamma_excited = atom.gamma;
        table.push_back(row);
    }
    return table;
}

namespace {

// Asymptotic Kolmogorov distribution Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_q(double x) {
    if (x < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

EquilibriumStats equilibrium_check(const MotionEnsemble& ensemble, double mass,
                                   double temperature) {
    const std::size_t n = ensemble.momenta.size();
    if (n < 2) throw std::invalid_argument("equilibrium_check: ensemble too small");
    const double sigma = std::sqrt(mass * k_boltzmann * temperature);

    std::vector<double> sorted = ensemble.momenta;
    std::sort(sorted.begin(), sorted.end());

    EquilibriumStats st;
    st.n = n;
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (double p : sorted) {
        m1 += p;
        m2 += p * p;
        m4 += p * p * p * p;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    st.mean = m1;
    st.second_moment_ratio = m2 / (sigma * sigma);
    const double c2 = m2 - m1 * m1;
    double c4 = 0.0;
    for (double p : sorted) c4 += std::pow(p - m1, 4);
    c4 /= n;
    st.kurtosis = c4 / (c2 * c2);

    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = 0.5 * std::erfc(-sorted[i] / (sigma * std::sqrt(2.0)));
        d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    st.ks_statistic = d;
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    st.ks_pvalue = kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    return st;
}

}  // namespace photherm
