#include "photherm/rates.hpp"

#include <cmath>
#include <vector>

#include "photherm/numerics.hpp"

namespace photherm {

using constants::hbar;
using constants::k_boltzmann;
using constants::pi;
using constants::two_pi;

double ScaledPoint::gamma_ground(double p_along_kl) const {
    const double det = dbar_l - doppler(p_along_kl);
    return omega * omega / (det * det + 0.25);
}

ScaledPoint make_scaled_point(const AtomSpec& atom, const DriveSpec& drive,
                              const ModeSpec& mode, double temperature) {
    atom.validate();
    drive.validate();
    mode.validate();
    if (!(temperature > 0.0))
        throw std::invalid_argument("scaled point: temperature must be positive");
    const double g = atom.gamma;
    ScaledPoint sp;
    sp.dbar_l = drive.detuning_bar / g;
    sp.omega = drive.omega / g;
    sp.alpha = mode.alpha / g;
    sp.kappa_cav = mode.kappa / g;
    sp.recoil = recoil_energy(drive.k_l, atom.mass) / (hbar * g);
    sp.tau = k_boltzmann * temperature / (hbar * g);
    sp.q_rel = mode.q / drive.k_l;
    sp.cos_theta = std::cos(mode.theta);
    sp.kv = std::sqrt(1.0 + sp.q_rel * sp.q_rel - 2.0 * sp.q_rel * sp.cos_theta);
    if (!(sp.kv > 0.0))
        throw std::invalid_argument("scaled point: degenerate geometry, |k_L - q| = 0");
    sp.n_dot_kl = (1.0 - sp.q_rel * sp.cos_theta) / sp.kv;
    sp.n_dot_q = (sp.q_rel * sp.cos_theta - sp.q_rel * sp.q_rel) / sp.kv;
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - sp.cos_theta * sp.cos_theta));
    sp.n_y = -sp.q_rel * sin_theta / sp.kv;
    sp.domega = mode_detuning_from_laser(atom, drive, mode) / g;
    const ShiftedDetunings d = shifted_detunings(atom, drive, mode);
    sp.dbar_q = d.dbar_q / g;
    sp.sigma_p = std::sqrt(sp.tau / (2.0 * sp.recoil));
    return sp;
}

ScaledPoint make_scaled_point(const OperatingPoint& pt) {
    return make_scaled_point(pt.atom, pt.drive, pt.mode, pt.temperature);
}

double gamma_ground(const MomentumSample& p, const AtomSpec& atom,
                    const DriveSpec& drive) {
    const double g = atom.gamma;
    const double det = drive.detuning_bar - p.p[0] * drive.k_l / atom.mass;
    return drive.omega * drive.omega * g / (det * det + 0.25 * g * g);
}

double doppler_temperature(const AtomSpec& atom, const DriveSpec& drive) {
    if (!(drive.detuning_bar < 0.0))
        throw std::domain_error("doppler_temperature: requires red detuning");
    const double g = atom.gamma;
    const double d = drive.detuning_bar;
    return 0.5 * hbar * (d * d + 0.25 * g * g) / (std::abs(d) * k_boltzmann);
}

double gamma_a_total(const AtomSpec& atom, const std::vector<ModeSpec>& modes,
                     const MomentumSample& p) {
    double total = 0.0;
    const double p2 = p.p[0] * p.p[0] + p.p[1] * p.p[1] + p.p[2] * p.p[2];
    for (const ModeSpec& m : modes) {
        if (!(m.kappa > 0.0))
            throw std::invalid_argument("gamma_a_total: cavity linewidth must be positive");
        // q in the xy plane at angle theta from the drive axis
        const double qx = m.q * std::cos(m.theta);
        const double qy = m.q * std::sin(m.theta);
        const double pmq2 = (p.p[0] - hbar * qx) * (p.p[0] - hbar * qx) +
                            (p.p[1] - hbar * qy) * (p.p[1] - hbar * qy) +
                            p.p[2] * p.p[2];
        const double delta_e = p2 / (2.0 * atom.mass) + hbar * atom.omega_a -
                               pmq2 / (2.0 * atom.mass) - hbar * m.omega_q;
        const double halpha2 = hbar * m.alpha * hbar * m.alpha;
        total += (two_pi / hbar) * halpha2 * hbar * m.kappa /
                 (delta_e * delta_e + 0.25 * hbar * hbar * m.kappa * m.kappa);
    }
    return total;
}

std::complex<double> coupling_r(CouplingKind kind, const MomentumSample& p,
                                const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode) {
    const double g = atom.gamma;
    double det;
    if (kind == CouplingKind::laser_to_mode) {
        det = drive.detuning_bar - p.p[0] * drive.k_l / atom.mass;
    } else {
        const double qx = mode.q * std::cos(mode.theta);
        const double qy = mode.q * std::sin(mode.theta);
        const double p_dot_q = p.p[0] * qx + p.p[1] * qy;
        det = shifted_detunings(atom, drive, mode).dbar_q - p_dot_q / atom.mass;
    }
    const std::complex<double> denom(det, 0.5 * g);
    return mode.alpha * drive.omega / denom;
}

double broadened_delta(double omega, double width) {
    if (!(width > 0.0)) throw std::domain_error("broadened_delta: width must be positive");
    return (width / two_pi) / (omega * omega + 0.25 * width * width);
}

namespace detail {

double lambda_plus_closed_core(const ScaledPoint& sp) {
    const double p0 = sp.p0();
    const double det = sp.dbar_l - sp.doppler(p0 * sp.n_dot_kl);
    const double boltz = std::exp(-p0 * p0 * sp.recoil / sp.tau);
    return std::sqrt(two_pi) * sp.omega * sp.omega * sp.alpha * sp.alpha * boltz /
           (sp.kv * std::sqrt(2.0 * sp.recoil * sp.tau) * (det * det + 0.25));
}

double lambda_minus_closed_core(const ScaledPoint& sp) {
    const double p0p = sp.p0_prime();
    const double det = sp.dbar_q - sp.doppler(p0p * sp.n_dot_q);
    const double boltz = std::exp(-p0p * p0p * sp.recoil / sp.tau);
    return std::sqrt(two_pi) * sp.omega * sp.omega * sp.alpha * sp.alpha * boltz /
           (sp.kv * std::sqrt(2.0 * sp.recoil * sp.tau) * (det * det + 0.25));
}

double lambda_minus_bath_approx_core(const ScaledPoint& sp) {
    return sp.alpha * sp.alpha / (sp.dbar_q * sp.dbar_q + 0.25);
}

double lambda_minus_bath_integrated_core(const ScaledPoint& sp) {
    // 1D average along the mode axis of the absorption Lorentzian.
    const double a2 = sp.alpha * sp.alpha;
    return numerics::gauss_mean(96, [&sp, a2](double t) {
        const double y = sp.sigma_p * t;  // p . q_hat
        const double det = sp.dbar_q - sp.doppler(y * sp.q_rel);
        return a2 / (det * det + 0.25);
    });
}

namespace {

// Shared pieces of the broadened-delta momentum averages. The energy-conserving
// direction is n_hat = (k_L - q)/|k_L - q|; the resonance in u = p.n_hat sits at
// p0 with Lorentzian half width eps*m/(2|k_L-q|).
struct BroadenedGeometry {
    double n_y = 0.0;       // signed transverse component of n_hat
    double sigma_c = 0.0;   // conditional spread of u given x
    double u_res = 0.0;     // resonant u (= p0)
    double hwhm_scale = 0.0;  // converts width in Gamma to momentum half width

    explicit BroadenedGeometry(const ScaledPoint& sp) {
        n_y = sp.n_y;
        sigma_c = sp.sigma_p * std::abs(n_y);
        u_res = sp.p0();
        hwhm_scale = 1.0 / (4.0 * sp.recoil * sp.kv);
    }
};

double refine_to_tolerance(const std::function<double(int)>& eval,
                           const QuadratureOptions& opt, const char* label) {
    double prev = eval(opt.initial_nodes);
    double rel = 0.0;
    for (int n = 2 * opt.initial_nodes; n <= opt.max_nodes; n *= 2) {
        const double cur = eval(n);
        rel = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
        if (rel < opt.rel_tol) return cur;
        prev = cur;
    }
    if (prev == 0.0) return 0.0;
    throw NumericError(std::string(label) + ": quadrature did not converge", rel,
                       opt.max_nodes);
}

}  // namespace

double lambda_plus_numeric_core(const ScaledPoint& sp, const QuadratureOptions& opt) {
    if (sp.omega == 0.0 || sp.alpha == 0.0) return 0.0;
    const BroadenedGeometry geo(sp);
    const double prefac = pi / (sp.recoil * sp.kv);

    auto eval = [&](int n) {
        return prefac * numerics::gauss_mean(n, [&](double t) {
            const double x = sp.sigma_p * t;  // p . kl_hat
            const double det = sp.dbar_l - sp.doppler(x);
            const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                              (det * det + 0.25);
            const double eps = opt.width_scale *
                               (sp.gamma_ground(x) +
                                sp.gamma_ground(x + sp.kv * sp.n_dot_kl));
            return r2 * numerics::voigt_profile(geo.u_res - sp.n_dot_kl * x,
                                                geo.sigma_c, eps * geo.hwhm_scale);
        });
    };
    return refine_to_tolerance(eval, opt, "lambda_plus_numeric");
}

double lambda_minus_numeric_core(const ScaledPoint& sp, const QuadratureOptions& opt) {
    if (sp.omega == 0.0 || sp.alpha == 0.0) return 0.0;
    const BroadenedGeometry geo(sp);
    const double prefac = pi / (sp.recoil * sp.kv);
    // u = p.n_hat and x = p.kl_hat determine p.q_vec through the plane geometry
    const double sin_n2 = geo.n_y * geo.n_y;
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - sp.cos_theta * sp.cos_theta));

    auto eval = [&](int n) {
        return prefac * numerics::gauss_mean(n, [&](double t) {
            const double x = sp.sigma_p * t;
            const double g0 = sp.gamma_ground(x);
            const double gf = sp.gamma_ground(x - sp.kv * sp.n_dot_kl);
            const double eps = opt.width_scale * (g0 + gf);
            const double hwhm = eps * geo.hwhm_scale;
            const double mean_u = sp.n_dot_kl * x;
            if (sin_n2 <= 1e-28) {
                // collinear geometry: u is pinned to x
                const double u = sp.n_dot_kl * x;
                const double det = sp.dbar_q -
                                   sp.doppler(x * sp.q_rel * sp.cos_theta);
                const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                                  (det * det + 0.25);
                const double du = u - sp.p0_prime();
                return r2 * hwhm / (pi * (du * du + hwhm * hwhm));
            }
            // resonance for absorption sits at u = p0'
            const double u_res = sp.p0_prime();
            const double lo = std::min(mean_u - 9.0 * geo.sigma_c, u_res - 512.0 * hwhm);
            const double hi = std::max(mean_u + 9.0 * geo.sigma_c, u_res + 512.0 * hwhm);
            // seed both sharp features: the resonance and the thermal bulk
            const std::vector<double> cuts{
                u_res - 64.0 * hwhm,       u_res - 8.0 * hwhm,
                u_res - hwhm,              u_res + hwhm,
                u_res + 8.0 * hwhm,        u_res + 64.0 * hwhm,
                mean_u - 3.0 * geo.sigma_c, mean_u - geo.sigma_c,
                mean_u + geo.sigma_c,       mean_u + 3.0 * geo.sigma_c};
            auto integrand = [&](double u) {
                const double gauss =
                    std::exp(-0.5 * std::pow((u - mean_u) / geo.sigma_c, 2)) /
                    (geo.sigma_c * std::sqrt(two_pi));
                // p.q_vec/k_L from the in-plane components
                const double y = (u - sp.n_dot_kl * x) / geo.n_y;
                const double p_dot_q =
                    x * sp.q_rel * sp.cos_theta + y * sp.q_rel * sin_theta;
                const double det = sp.dbar_q - sp.doppler(p_dot_q);
                const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                                  (det * det + 0.25);
                const double lor =
                    hwhm / (pi * ((u - u_res) * (u - u_res) + hwhm * hwhm));
                return gauss * r2 * lor;
            };
            return numerics::integrate_adaptive(integrand, lo, hi, 1e-9, 1e-300, cuts)
                .value;
        });
    };
    return refine_to_tolerance(eval, opt, "lambda_minus_numeric");
}

}  // namespace detail

namespace {
double to_rate(const AtomSpec& atom, double natural) { return natural * atom.gamma; }
}  // namespace

double lambda_plus_numeric(const AtomSpec& atom, const DriveSpec& drive,
                           const ModeSpec& mode, double temperature,
                           const QuadratureOptions& opt) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    return to_rate(atom, detail::lambda_plus_numeric_core(sp, opt));
}

double lambda_minus_numeric(const AtomSpec& atom, const DriveSpec& drive,
                            const ModeSpec& mode, double temperature,
                            const QuadratureOptions& opt) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    return to_rate(atom, detail::lambda_minus_numeric_core(sp, opt));
}

double lambda_plus_closed(const AtomSpec& atom, const DriveSpec& drive,
                          const ModeSpec& mode, double temperature) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    return to_rate(atom, detail::lambda_plus_closed_core(sp));
}

double lambda_minus_closed(const AtomSpec& atom, const DriveSpec& drive,
                           const ModeSpec& mode, double temperature) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    return to_rate(atom, detail::lambda_minus_closed_core(sp));
}

BathLossRates lambda_minus_bath(const AtomSpec& atom, const DriveSpec& drive,
                                const ModeSpec& mode, double temperature) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    BathLossRates out;
    out.integrated = to_rate(atom, detail::lambda_minus_bath_integrated_core(sp));
    out.approximate = to_rate(atom, detail::lambda_minus_bath_approx_core(sp));
    return out;
}

RateSet assemble_rates(const AtomSpec& atom, const DriveSpec& drive,
                       const ModeSpec& mode, double temperature,
                       const AssembleOptions& opt) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    RateSet rs;
    rs.lambda_plus_l = to_rate(atom, detail::lambda_plus_closed_core(sp));
    rs.lambda_minus_l = to_rate(atom, detail::lambda_minus_closed_core(sp));
    rs.lambda_minus_b =
        to_rate(atom, opt.doppler_neglected_loss
                          ? detail::lambda_minus_bath_approx_core(sp)
                          : detail::lambda_minus_bath_integrated_core(sp));
    rs.kappa_q = mode.kappa;
    rs.p0 = sp.p0() * hbar * drive.k_l;
    rs.p0_prime = sp.p0_prime() * hbar * drive.k_l;
    rs.temperature = temperature;
    rs.omega_rel = sp.domega * atom.gamma;
    return rs;
}

}  // namespace photherm
