#include "photherm/jumpmc.hpp"

#include <cmath>

#include "photherm/numerics.hpp"
#include "photherm/rng.hpp"

namespace photherm {

using constants::hbar;
using constants::pi;
using constants::two_pi;

std::complex<double> amplitude_f(const ComplexLevel& initial,
                                 const ComplexLevel& final_state, double t,
                                 int laser_sign, double omega_l) {
    if (!(t >= 0.0)) throw std::domain_error("amplitude_f: t must be >= 0");
    const std::complex<double> a = initial.z() + std::complex<double>(laser_sign * omega_l, 0.0);
    const std::complex<double> dz = final_state.z() - a;
    const std::complex<double> i(0.0, 1.0);
    // (exp(-i a t) - exp(-i z_f t)) / (i (z_f - a)), stable near degeneracy
    return std::exp(-i * a * t) * t * numerics::phi1(-i * dz * t);
}

namespace {

// All members in natural units (Gamma = 1, momenta in hbar k_L).
struct JumpCore {
    ScaledPoint sp;
    double qx = 0.0, qy = 0.0;  // mode wavevector / k_L

    explicit JumpCore(const ScaledPoint& s) : sp(s) {
        qx = sp.q_rel * sp.cos_theta;
        qy = sp.q_rel * std::sqrt(std::max(0.0, 1.0 - sp.cos_theta * sp.cos_theta));
    }

    double gamma_at(double x) const { return sp.gamma_ground(x); }

    // |f(t_j)|^2 / r for a channel with frequency gap d_re (final minus
    // effective initial) and final decay gamma_f; r = exp(-gamma_0 t).
    static double f2_over_r(double d_re, double gamma0, double gamma_f, double t) {
        const std::complex<double> dz(d_re, -0.5 * (gamma_f - gamma0));
        const std::complex<double> i(0.0, 1.0);
        const std::complex<double> ph = t * numerics::phi1(-i * dz * t);
        return std::norm(ph);
    }

    // Unnormalized outcome weights at jump time t (natural units).
    std::array<double, 4> weights(const std::array<double, 3>& p, int n_q,
                                  double t) const {
        const double x = p[0];
        const double g0 = gamma_at(x);
        std::array<double, 4> w{g0, 0.0, 0.0, 0.0};
        const double er = sp.recoil;

        // laser absorbed, mode photon emitted
        {
            const double xf = x + 1.0 - qx;
            const double yf = p[1] - qy;
            const double gf = gamma_at(xf);
            const double dp2 = xf * xf + yf * yf - x * x - p[1] * p[1];
            const double d_re = er * dp2 + sp.domega;
            const double det = sp.dbar_l - sp.doppler(x);
            const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                              (det * det + 0.25);
            w[1] = gf * r2 * (n_q + 1.0) * f2_over_r(d_re, g0, gf, t);
        }
        if (n_q > 0) {
            // mode photon absorbed, laser photon emitted
            const double xf = x - 1.0 + qx;
            const double yf = p[1] + qy;
            const double gf = gamma_at(xf);
            const double dp2 = xf * xf + yf * yf - x * x - p[1] * p[1];
            const double d_re = er * dp2 - sp.domega;
            const double p_dot_q = x * qx + p[1] * qy;
            const double det = sp.dbar_q - sp.doppler(p_dot_q);
            const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                              (det * det + 0.25);
            w[2] = gf * r2 * n_q * f2_over_r(d_re, g0, gf, t);

            // mode photon absorbed into the excited state, lost to the bath
            const double p_dot_q2 = x * qx + p[1] * qy;
            const double d_re_e = sp.doppler(p_dot_q2) - sp.dbar_q;
            w[3] = sp.alpha * sp.alpha * n_q * f2_over_r(d_re_e, g0, 1.0, t);
        }
        return w;
    }
};

}  // namespace

JumpProbabilities jump_outcome_probabilities(const AtomSpec& atom,
                                             const DriveSpec& drive,
                                             const ModeSpec& mode,
                                             const MomentumSample& p, int n_q,
                                             double r) {
    if (!(r > 0.0 && r <= 1.0))
        throw std::domain_error("jump_outcome_probabilities: r must lie in (0, 1]");
    if (n_q < 0) throw std::domain_error("jump_outcome_probabilities: n_q must be >= 0");
    const double temperature_dummy = 1.0;  // not used by the weights
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature_dummy);
    const JumpCore core(sp);
    const double unit_p = hbar * drive.k_l;
    const std::array<double, 3> pn{p.p[0] / unit_p, p.p[1] / unit_p, p.p[2] / unit_p};
    const double g0 = core.gamma_at(pn[0]);
    if (!(g0 > 0.0))
        throw std::domain_error("jump_outcome_probabilities: no dissipation at Omega = 0");
    const double t = -std::log(r) / g0;

    JumpProbabilities out;
    out.weight = core.weights(pn, n_q, t);
    double sum = 0.0;
    for (double w : out.weight) sum += w;
    for (int i = 0; i < 4; ++i) out.probability[i] = out.weight[i] / sum;
    out.correction_ratio = (sum - out.weight[0]) / out.weight[0];
    return out;
}

std::pair<double, double> TrajectoryRecord::emission_rate_estimate() const {
    double s1 = 0.0, s2 = 0.0;
    const size_t n = outcomes.size();
    for (size_t i = 0; i < n; ++i) {
        const double v = (outcomes[i] == JumpOutcome::emit_system) ? gamma_at_jump[i] : 0.0;
        s1 += v;
        s2 += v * v;
    }
    const double mean = s1 / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

std::pair<double, double> TrajectoryRecord::absorption_rate_estimate() const {
    double s1 = 0.0, s2 = 0.0;
    const size_t n = outcomes.size();
    for (size_t i = 0; i < n; ++i) {
        const double v =
            (outcomes[i] == JumpOutcome::absorb_to_laser) ? gamma_at_jump[i] : 0.0;
        s1 += v;
        s2 += v * v;
    }
    const double mean = s1 / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

TrajectoryRecord sample_trajectory(const AtomSpec& atom, const DriveSpec& drive,
                                   const ModeSpec& mode, double temperature,
                                   int n_q, double duration, std::uint64_t seed) {
    if (!(duration > 0.0))
        throw std::invalid_argument("sample_trajectory: duration must be positive");
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    const JumpCore core(sp);
    rng::Stream stream(seed);

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.duration = duration;
    const double t_end = duration * atom.gamma;  // natural time
    const double unit_p = hbar * drive.k_l;

    double t_now = 0.0;
    bool first = true;
    while (true) {
        const std::array<double, 3> p{sp.sigma_p * stream.normal(),
                                      sp.sigma_p * stream.normal(),
                                      sp.sigma_p * stream.normal()};
        if (first) {
            rec.initial_p.p = {p[0] * unit_p, p[1] * unit_p, p[2] * unit_p};
            first = false;
        }
        const double g0 = core.gamma_at(p[0]);
        if (!(g0 > 0.0)) break;  // no drive, no jumps
        const double r = stream.uniform();
        const double t_j = -std::log(r) / g0;
        if (t_now + t_j > t_end) break;
        t_now += t_j;

        const std::array<double, 4> w = core.weights(p, n_q, t_j);
        const double sum = w[0] + w[1] + w[2] + w[3];
        const double pick = stream.uniform() * sum;
        int outcome = 3;
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) {
            acc += w[i];
            if (pick <= acc) {
                outcome = i;
                break;
            }
        }
        rec.jump_times.push_back(t_now / atom.gamma);
        rec.outcomes.push_back(static_cast<JumpOutcome>(outcome));
        rec.gamma_at_jump.push_back(g0 * atom.gamma);
        rec.counts[outcome] += 1;
    }
    return rec;
}

namespace {

// Closed-form time integral: gamma0 * int_0^inf |f|^2 dt for a channel with
// gap d_re and decay pair (gamma0, gamma_f), all in natural units.
double time_integral_factor(double d_re, double gamma0, double gamma_f) {
    const double gsum = gamma0 + gamma_f;
    return gsum / (gamma_f * (d_re * d_re + 0.25 * gsum * gsum));
}

struct EmissionGeometry {
    double qx, qy, dshift;  // dshift = kv * n_dot_kl along the drive axis
};

}  // namespace

double emission_rate_at(const AtomSpec& atom, const DriveSpec& drive,
                        const ModeSpec& mode, const MomentumSample& p, int n_q) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, 1.0);
    const JumpCore core(sp);
    const double unit_p = hbar * drive.k_l;
    const double x = p.p[0] / unit_p;
    const double y = p.p[1] / unit_p;
    const double g0 = core.gamma_at(x);
    const double xf = x + 1.0 - core.qx;
    const double yf = y - core.qy;
    const double gf = core.gamma_at(xf);
    const double dp2 = xf * xf + yf * yf - x * x - y * y;
    const double d_re = sp.recoil * dp2 + sp.domega;
    const double det = sp.dbar_l - sp.doppler(x);
    const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega / (det * det + 0.25);
    return atom.gamma * gf * r2 * (n_q + 1.0) * time_integral_factor(d_re, g0, gf);
}

double absorption_rate_at(const AtomSpec& atom, const DriveSpec& drive,
                          const ModeSpec& mode, const MomentumSample& p, int n_q) {
    if (n_q < 1) return 0.0;
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, 1.0);
    const JumpCore core(sp);
    const double unit_p = hbar * drive.k_l;
    const double x = p.p[0] / unit_p;
    const double y = p.p[1] / unit_p;
    const double g0 = core.gamma_at(x);
    const double xf = x - 1.0 + core.qx;
    const double yf = y + core.qy;
    const double gf = core.gamma_at(xf);
    const double dp2 = xf * xf + yf * yf - x * x - y * y;
    const double d_re = sp.recoil * dp2 - sp.domega;
    const double p_dot_q = x * core.qx + y * core.qy;
    const double det = sp.dbar_q - sp.doppler(p_dot_q);
    const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega / (det * det + 0.25);
    return atom.gamma * gf * r2 * n_q * time_integral_factor(d_re, g0, gf);
}

namespace {

// Momentum average of a per-(x, u) rate against the Boltzmann distribution:
// outer Gauss-Hermite along the drive axis, adaptive quadrature across the
// energy-conserving direction. Refined until stable to rel_tol.
double boltzmann_average_xu(const ScaledPoint& sp, double u_res,
                            const std::function<double(double, double, double)>& rate,
                            int nodes0 = 96, double rel_tol = 1e-5) {
    const double sigma_c = sp.sigma_p * std::abs(sp.n_y);

    auto eval = [&](int n) {
        return numerics::gauss_mean(n, [&](double t) {
            const double x = sp.sigma_p * t;
            if (sigma_c <= 1e-14 * sp.sigma_p) {
                return rate(x, sp.n_dot_kl * x, 1.0);
            }
            const double mean_u = sp.n_dot_kl * x;
            const double g0 = sp.gamma_ground(x);
            const double gf = sp.gamma_ground(x + sp.kv * sp.n_dot_kl);
            const double hwhm = (g0 + gf) / (4.0 * sp.recoil * sp.kv);
            const double lo = std::min(mean_u - 9.0 * sigma_c, u_res - 512.0 * hwhm);
            const double hi = std::max(mean_u + 9.0 * sigma_c, u_res + 512.0 * hwhm);
            // seed both sharp features: the resonance and the thermal bulk
            const std::vector<double> cuts{
                u_res - 64.0 * hwhm,      u_res - 8.0 * hwhm,
                u_res - hwhm,             u_res + hwhm,
                u_res + 8.0 * hwhm,       u_res + 64.0 * hwhm,
                mean_u - 3.0 * sigma_c,   mean_u - sigma_c,
                mean_u + sigma_c,         mean_u + 3.0 * sigma_c};
            auto integrand = [&](double u) {
                const double z = (u - mean_u) / sigma_c;
                const double gauss = std::exp(-0.5 * z * z) /
                                     (sigma_c * std::sqrt(two_pi));
                return gauss * rate(x, u, 0.0);
            };
            return numerics::integrate_adaptive(integrand, lo, hi, 1e-9, 1e-300, cuts)
                .value;
        });
    };
    double prev = eval(nodes0);
    for (int n = 2 * nodes0; n <= 8 * nodes0; n *= 2) {
        const double cur = eval(n);
        if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-300))
            return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace

double averaged_emission_rate(const AtomSpec& atom, const DriveSpec& drive,
                              const ModeSpec& mode, double temperature,
                              int n_q, std::optional<MomentumSample> p) {
    if (p) return emission_rate_at(atom, drive, mode, *p, n_q);
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    if (sp.omega == 0.0 || sp.alpha == 0.0) return 0.0;

    auto rate = [&](double x, double u, double /*pinned*/) {
        const double g0 = sp.gamma_ground(x);
        const double gf = sp.gamma_ground(x + sp.kv * sp.n_dot_kl);
        // frequency gap at given u: final minus (initial + laser)
        const double d_re = 2.0 * sp.recoil * sp.kv * u +
                            sp.recoil * sp.kv * sp.kv + sp.domega;
        const double det = sp.dbar_l - sp.doppler(x);
        const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                          (det * det + 0.25);
        return gf * r2 * (n_q + 1.0) * time_integral_factor(d_re, g0, gf);
    };
    return atom.gamma * boltzmann_average_xu(sp, sp.p0(), rate);
}

double averaged_absorption_rate(const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode, double temperature,
                                int n_q, std::optional<MomentumSample> p) {
    if (p) return absorption_rate_at(atom, drive, mode, *p, n_q);
    if (n_q < 1) return 0.0;
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    if (sp.omega == 0.0 || sp.alpha == 0.0) return 0.0;
    const double sin_theta =
        std::sqrt(std::max(0.0, 1.0 - sp.cos_theta * sp.cos_theta));

    auto rate = [&](double x, double u, double pinned) {
        const double g0 = sp.gamma_ground(x);
        const double gf = sp.gamma_ground(x - sp.kv * sp.n_dot_kl);
        // gap of the absorb-then-reemit channel, zero at u = p0'
        const double d_re = 2.0 * sp.recoil * sp.kv * u -
                            sp.recoil * sp.kv * sp.kv + sp.domega;
        double p_dot_q;
        if (pinned > 0.5) {
            p_dot_q = x * sp.q_rel * sp.cos_theta;
        } else {
            const double y = (u - sp.n_dot_kl * x) / sp.n_y;
            p_dot_q = x * sp.q_rel * sp.cos_theta + y * sp.q_rel * sin_theta;
        }
        const double det = sp.dbar_q - sp.doppler(p_dot_q);
        const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                          (det * det + 0.25);
        return gf * r2 * static_cast<double>(n_q) * time_integral_factor(d_re, g0, gf);
    };
    return atom.gamma * boltzmann_average_xu(sp, sp.p0_prime(), rate);
}

double CountsRecord::mean() const {
    double mass = 0.0, first = 0.0;
    for (size_t n = 0; n < dwell.size(); ++n) {
        mass += dwell[n];
        first += n * dwell[n];
    }
    return mass > 0.0 ? first / mass : 0.0;
}

double CountsRecord::variance() const {
    const double mu = mean();
    double mass = 0.0, second = 0.0;
    for (size_t n = 0; n < dwell.size(); ++n) {
        mass += dwell[n];
        second += (n - mu) * (n - mu) * dwell[n];
    }
    return mass > 0.0 ? second / mass : 0.0;
}

CountsRecord simulate_photon_number(double lambda_up, double lambda_down,
                                    double duration, std::uint64_t seed,
                                    int n_initial) {
    if (!(lambda_up >= 0.0) || !(lambda_down > 0.0))
        throw std::invalid_argument("simulate_photon_number: invalid rates");
    if (n_initial < 0)
        throw std::invalid_argument("simulate_photon_number: n_initial must be >= 0");

    CountsRecord rec;
    rec.seed = seed;
    rec.lambda_up = lambda_up;
    rec.lambda_down = lambda_down;
    rec.transient_gain = lambda_up >= lambda_down;

    std::size_t cap;
    if (rec.transient_gain) {
        cap = 50 * (n_initial + 1) + 1000;
    } else {
        const double mean = lambda_up / (lambda_down - lambda_up);
        cap = static_cast<std::size_t>(std::ceil(50.0 * (mean + 1.0)));
    }
    rec.dwell.assign(cap + 1, 0.0);

    rng::Stream stream(seed);
    const int n_batches = 32;
    std::vector<double> batch_first(n_batches, 0.0), batch_mass(n_batches, 0.0);

    double t = 0.0;
    long long n = n_initial;
    while (t < duration) {
        const double up = (n + 1) * lambda_up;
        const double down = n * lambda_down;
        const double total = up + down;
        const double tau = stream.exponential(total);
        const double dwell = std::min(tau, duration - t);
        if (static_cast<std::size_t>(n) <= cap) {
            rec.dwell[n] += dwell;
        } else {
            rec.overflow_events += 1;
        }
        const int batch = std::min<int>(n_batches - 1,
                                        static_cast<int>(t / duration * n_batches));
        batch_first[batch] += n * dwell;
        batch_mass[batch] += dwell;
        t += tau;
        if (t >= duration) break;
        n += (stream.uniform() * total <= up) ? 1 : -1;
        rec.events += 1;
    }
    rec.total_time = duration;

    double bm = 0.0;
    std::vector<double> means(n_batches, 0.0);
    for (int b = 0; b < n_batches; ++b) {
        means[b] = batch_mass[b] > 0.0 ? batch_first[b] / batch_mass[b] : 0.0;
        bm += means[b];
    }
    bm /= n_batches;
    double var = 0.0;
    for (int b = 0; b < n_batches; ++b) var += (means[b] - bm) * (means[b] - bm);
    var /= (n_batches - 1);
    rec.mean_std_error = std::sqrt(var / n_batches);
    return rec;
}

}  // namespace photherm
