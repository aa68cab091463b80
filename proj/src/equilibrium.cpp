#include "photherm/equilibrium.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace photherm {

using constants::hbar;
using constants::k_boltzmann;

namespace {
constexpr double exp_clamp = 700.0;
double safe_exp(double x) { return std::exp(std::min(x, exp_clamp)); }
}  // namespace

std::string to_string(Regime r) {
    switch (r) {
        case Regime::gce: return "gce";
        case Regime::gain: return "gain";
        case Regime::quasithermal: return "quasithermal";
        case Regime::invalid: return "invalid";
    }
    return "invalid";
}

NbarResult solve_nbar(const RateSet& rates) {
    const double denom = rates.lambda_minus_l + rates.lambda_minus_b +
                         rates.kappa_q - rates.lambda_plus_l;
    NbarResult out;
    if (!(denom > 0.0)) {
        out.divergent = true;
        out.nbar = std::numeric_limits<double>::infinity();
        return out;
    }
    out.nbar = rates.lambda_plus_l / denom;
    return out;
}

double effective_temperature_beta(double nbar, double homega_rel, double delta_mu) {
    if (!(nbar > 0.0) || !std::isfinite(nbar))
        throw std::domain_error("effective_temperature_beta: nbar must be finite and positive");
    const double denom = homega_rel + delta_mu;
    if (denom == 0.0)
        throw std::domain_error("effective_temperature_beta: at the transition frequency");
    return std::log1p(1.0 / nbar) / denom;
}

std::map<std::string, double> ValidityMargins::as_map() const {
    return {{"high_t", high_t},
            {"small_loss", small_loss},
            {"chain35_left", chain35_left},
            {"chain35_right", chain35_right},
            {"excitation", excitation}};
}

bool ValidityMargins::all_ok(double threshold) const {
    for (const auto& [name, value] : as_map())
        if (!(value < threshold)) return false;
    return true;
}

ValidityMargins validity_margins(const AtomSpec& atom, const DriveSpec& drive,
                                 const ModeSpec& mode, double temperature) {
    const ScaledPoint sp = make_scaled_point(atom, drive, mode, temperature);
    ValidityMargins m;
    const double doppler_width = sp.kv * std::sqrt(2.0 * sp.recoil * sp.tau);
    m.high_t = sp.gamma_ground(0.0) / doppler_width;
    m.small_loss = doppler_width / (sp.omega * sp.omega);
    const double lorentz2 = sp.dbar_l * sp.dbar_l + 0.25;
    m.chain35_right = lorentz2 * sp.recoil * (1.0 - sp.cos_theta) /
                      (std::pow(sp.omega, 4) * std::abs(sp.dbar_l));
    m.chain35_left = (1.0 / (lorentz2 * lorentz2)) / m.chain35_right;
    m.excitation = sp.omega / std::sqrt(lorentz2);
    return m;
}

namespace detail {

double LossBalance::g(double x) const {
    const double u = x / (2.0 * recoil * kv) - 0.5 * kv;
    return safe_exp(-x / tau) + coeff * safe_exp(u * u * recoil / tau) - 1.0;
}

int LossBalance::g_prime_sign(double x) const {
    const double u = x / (2.0 * recoil * kv) - 0.5 * kv;
    if (u <= 0.0) return -1;
    const double s = std::log(coeff * u / kv) + u * u * recoil / tau + x / tau;
    return s > 0.0 ? 1 : -1;
}

double LossBalance::balance_ratio(double domega) const {
    const double u = -domega / (2.0 * recoil * kv) - 0.5 * kv;
    return safe_exp(domega / tau) + coeff * safe_exp(u * u * recoil / tau);
}

double LossBalance::upper_bracket() const { return 10.0 * recoil * kv * kv + 10.0 * tau; }

double LossBalance::argmin() const {
    // g is strictly convex: descending for u <= 0, so bracket the sign change
    // of g' from the zero-crossing of u upward.
    double lo = recoil * kv * kv;  // u = 0
    double hi = upper_bracket();
    if (g_prime_sign(hi) < 0) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g_prime_sign(mid) < 0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

LossBalance make_loss_balance(const ScaledPoint& sp) {
    LossBalance lb;
    lb.tau = sp.tau;
    lb.recoil = sp.recoil;
    lb.kv = sp.kv;
    lb.coeff = sp.kv * std::sqrt(sp.recoil * sp.tau / constants::pi) /
               (sp.omega * sp.omega);
    return lb;
}

namespace {

// Bracketed bisection refined by secant steps; f(lo) and f(hi) must differ
// in sign. Bisection first, since the bracket endpoints can carry clamped
// exponentials that break a secant proposal.
double find_root(const LossBalance& lb, double lo, double hi, double rel_tol) {
    double flo = lb.g(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = lb.g(mid);
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= rel_tol * std::max(hi, 1e-300)) break;
    }
    double fhi = lb.g(hi);
    flo = lb.g(lo);
    for (int it = 0; it < 6 && fhi != flo; ++it) {
        const double mid = lo - flo * (hi - lo) / (fhi - flo);
        if (!(mid > lo && mid < hi)) break;
        const double fm = lb.g(mid);
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

}  // namespace detail

DeltaMuResult delta_mu_and_critical(const AtomSpec& atom, const DriveSpec& drive,
                                    const ModeSpec& mode_geometry,
                                    double temperature) {
    if (!(drive.detuning_bar < 0.0))
        throw std::domain_error("delta_mu_and_critical: requires red detuning");
    const ScaledPoint sp = make_scaled_point(atom, drive, mode_geometry, temperature);
    detail::LossBalance lb = detail::make_loss_balance(sp);
    const double coeff_unit = sp.kv * std::sqrt(sp.recoil * sp.tau / constants::pi);

    auto g_min_at = [&](double om) {
        detail::LossBalance probe = lb;
        probe.coeff = coeff_unit / (om * om);
        return probe.g(probe.argmin());
    };

    // critical drive: unique sign change of min g in the drive strength
    const double abs_dl = std::abs(sp.dbar_l);
    double om_lo = 1e-6 * abs_dl;
    double om_hi = abs_dl;
    while (g_min_at(om_lo) < 0.0 && om_lo > 1e-300) om_lo *= 0.25;
    while (g_min_at(om_hi) > 0.0 && om_hi < 1e6 * abs_dl) om_hi *= 2.0;
    while (om_hi - om_lo > 1e-5 * abs_dl) {
        const double mid = 0.5 * (om_lo + om_hi);
        if (g_min_at(mid) > 0.0)
            om_lo = mid;
        else
            om_hi = mid;
    }

    DeltaMuResult out;
    out.omega_c = 0.5 * (om_lo + om_hi) * atom.gamma;
    if (drive.omega == 0.0) {
        out.g_min = std::numeric_limits<double>::infinity();
        out.g_argmin = sp.recoil * sp.kv * sp.kv * hbar * atom.gamma;
        return out;
    }

    const double am = lb.argmin();
    out.g_min = lb.g(am);
    out.g_argmin = am * hbar * atom.gamma;
    if (out.g_min < 0.0) {
        double upper = lb.upper_bracket();
        for (int widen = 0; widen < 3 && lb.g(upper) < 0.0; ++widen) upper *= 2.0;
        const double left = detail::find_root(lb, 0.0, am, 1e-10);
        const double right = detail::find_root(lb, am, upper, 1e-10);
        out.delta_mu = left * hbar * atom.gamma;
        out.delta_mu_right = right * hbar * atom.gamma;
    }
    return out;
}

namespace {

// T_o: limiting effective temperature at the equilibrium-to-gain transition,
// by central difference of ln X in the mode frequency (step 1e-4 Gamma).
double transition_temperature(const detail::LossBalance& lb, double x_left,
                              double gamma_si) {
    const double w_t = -x_left;  // (omega_q - omega_l)/Gamma at the transition
    const double h = 1e-4;
    const double lnp = std::log(lb.balance_ratio(w_t + h));
    const double lnm = std::log(lb.balance_ratio(w_t - h));
    const double beta_o = (lnp - lnm) / (2.0 * h * hbar * gamma_si);
    return 1.0 / (k_boltzmann * beta_o);
}

}  // namespace

Regime classify_regime(const EquilibriumPoint& point, double omega_c) {
    if (!point.error.empty()) return Regime::invalid;
    if (point.divergent) return Regime::gain;
    if (point.t_eff > 0.0 && point.t_o > 0.0 && point.rabi >= omega_c) {
        const double band = std::log10(point.t_eff / point.t_o);
        if (band >= -0.5 && band <= 0.0) return Regime::gce;
    }
    return Regime::quasithermal;
}

EquilibriumPoint equilibrium_point(const AtomSpec& atom, const DriveSpec& drive,
                                   const ModeSpec& mode_geometry, double temperature,
                                   double omega_l_minus_omega_q,
                                   const EquilibriumOptions& opt) {
    EquilibriumPoint pt;
    pt.omega_rel = omega_l_minus_omega_q;
    pt.rabi = drive.omega;
    pt.margins = validity_margins(atom, drive, mode_geometry, temperature);

    const DeltaMuResult dm = delta_mu_and_critical(atom, drive, mode_geometry,
                                                   temperature);
    const ScaledPoint sp = make_scaled_point(atom, drive, mode_geometry, temperature);
    const detail::LossBalance lb = detail::make_loss_balance(sp);
    const double domega = -omega_l_minus_omega_q / atom.gamma;

    double ratio;
    if (opt.doppler_neglected_loss) {
        ratio = lb.balance_ratio(domega) + sp.kappa_cav /
                std::max(detail::lambda_plus_closed_core(sp), 1e-300);
    } else {
        const ModeSpec mode = mode_at_offset(atom, drive, mode_geometry, domega);
        const RateSet rs = assemble_rates(atom, drive, mode, temperature,
                                          {/*doppler_neglected_loss=*/false});
        ratio = (rs.lambda_minus_l + rs.lambda_minus_b + rs.kappa_q) /
                std::max(rs.lambda_plus_l, 1e-300);
    }

    if (!(ratio > 1.0)) {
        pt.divergent = true;
        pt.nbar = std::numeric_limits<double>::infinity();
    } else {
        pt.nbar = 1.0 / (ratio - 1.0);
    }

    pt.delta_mu = std::numeric_limits<double>::quiet_NaN();
    pt.t_o = std::numeric_limits<double>::quiet_NaN();
    pt.t_eff = std::numeric_limits<double>::quiet_NaN();
    if (dm.delta_mu) {
        pt.delta_mu = *dm.delta_mu;
        const double x_left = *dm.delta_mu / (hbar * atom.gamma);
        pt.t_o = transition_temperature(lb, x_left, atom.gamma);
        if (!pt.divergent) {
            const double denom = hbar * domega * atom.gamma + pt.delta_mu;
            if (std::abs(denom) < 1e-9 * hbar * atom.gamma) {
                pt.t_eff = pt.t_o;
                pt.beta_eff = 1.0 / (k_boltzmann * pt.t_o);
            } else {
                pt.beta_eff = std::log(ratio) / denom;
                pt.t_eff = 1.0 / (k_boltzmann * pt.beta_eff);
            }
        }
    }
    pt.regime = classify_regime(pt, dm.omega_c);
    return pt;
}

PhaseDiagram phase_diagram(const AtomSpec& atom, const DriveSpec& drive_family,
                           const ModeSpec& mode_geometry,
                           const std::vector<double>& rabi_grid,
                           const std::vector<double>& omega_rel_grid,
                           int threads, const EquilibriumOptions& opt) {
    for (const auto* grid : {&rabi_grid, &omega_rel_grid}) {
        for (size_t i = 1; i < grid->size(); ++i)
            if (!((*grid)[i] > (*grid)[i - 1]))
                throw std::invalid_argument("phase_diagram: grids must be strictly increasing");
    }
    PhaseDiagram pd;
    pd.rabi = rabi_grid;
    pd.omega_rel = omega_rel_grid;
    pd.cells.resize(rabi_grid.size() * omega_rel_grid.size());

    auto compute_row = [&](size_t i) {
        DriveSpec drive = drive_family;
        drive.omega = rabi_grid[i];
        for (size_t j = 0; j < omega_rel_grid.size(); ++j) {
            EquilibriumPoint& cell = pd.cells[i * omega_rel_grid.size() + j];
            try {
                const double temperature = doppler_temperature(atom, drive);
                cell = equilibrium_point(atom, drive, mode_geometry, temperature,
                                         omega_rel_grid[j], opt);
            } catch (const std::exception& e) {
                cell = EquilibriumPoint{};
                cell.omega_rel = omega_rel_grid[j];
                cell.rabi = rabi_grid[i];
                cell.error = e.what();
                cell.regime = Regime::invalid;
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(threads, rabi_grid.size()));
    if (nthreads == 1) {
        for (size_t i = 0; i < rabi_grid.size(); ++i) compute_row(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&]() {
                for (size_t i = next.fetch_add(1); i < rabi_grid.size();
                     i = next.fetch_add(1))
                    compute_row(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    return pd;
}

}  // namespace photherm
