#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "photherm/numerics.hpp"
#include "photherm/rates.hpp"
#include "photherm/rng.hpp"

#include <json.hpp>

using namespace photherm;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

ModeSpec mode_offset(const OperatingPoint& pt, double omega_rel_gamma) {
    return mode_at_offset(pt.atom, pt.drive, pt.mode, omega_rel_gamma);
}

// Random operating point in the large-detuning validity neighborhood.
OperatingPoint random_point(rng::Stream& rng) {
    OperatingPoint pt = run_preset("fig4");
    pt.drive.detuning_bar = -(80.0 + 160.0 * rng.uniform()) * pt.atom.gamma;
    pt.drive.omega = (4.0 + 26.0 * rng.uniform()) * pt.atom.gamma;
    pt.mode.alpha = (0.005 + 0.02 * rng.uniform()) * pt.atom.gamma;
    pt.mode.q = pt.drive.k_l * (0.9 + 0.2 * rng.uniform());
    pt.mode.theta = constants::pi * (0.25 + 0.5 * rng.uniform());
    pt.temperature = doppler_temperature(pt.atom, pt.drive);
    pt.mode = mode_offset(pt, (rng.uniform() - 0.4) * 8.0);
    return pt;
}

}  // namespace

TEST_CASE("ground-state scattering rate") {
    const OperatingPoint pt = run_preset("fig4");
    const double g = pt.atom.gamma;
    const double om = pt.drive.omega;
    const double dl = pt.drive.detuning_bar;

    CHECK(rel_err(gamma_ground({{0.0, 0.0, 0.0}}, pt.atom, pt.drive),
                  om * om * g / (dl * dl + 0.25 * g * g)) < 1e-14);

    DriveSpec off = pt.drive;
    off.omega = 0.0;
    CHECK(gamma_ground({{1e-26, 0.0, 0.0}}, pt.atom, off) == 0.0);

    // Lorentzian peak where the Doppler shift matches the detuning
    const double p_res = dl * pt.atom.mass / pt.drive.k_l;
    CHECK(rel_err(gamma_ground({{p_res, 0.0, 0.0}}, pt.atom, pt.drive),
                  4.0 * om * om / g) < 1e-12);
}

TEST_CASE("doppler temperature") {
    const OperatingPoint std_pt = run_preset("standard");
    CHECK(rel_err(doppler_temperature(std_pt.atom, std_pt.drive),
                  constants::hbar * std_pt.atom.gamma /
                      (2.0 * constants::k_boltzmann)) < 1e-14);

    // frozen independent evaluation at -157 Gamma
    const OperatingPoint fig4 = run_preset("fig4");
    CHECK(rel_err(doppler_temperature(fig4.atom, fig4.drive),
                  6.7813992374726197e-4) < 1e-12);

    // vanishing linewidth limit: k_B T -> hbar |detuning| / 2
    AtomSpec narrow = fig4.atom;
    narrow.gamma = fig4.atom.gamma * 1e-7;
    CHECK(rel_err(doppler_temperature(narrow, fig4.drive),
                  0.5 * constants::hbar * std::abs(fig4.drive.detuning_bar) /
                      constants::k_boltzmann) < 1e-8);

    DriveSpec blue = fig4.drive;
    blue.detuning_bar = +fig4.atom.gamma;
    CHECK_THROWS_AS(doppler_temperature(fig4.atom, blue), std::domain_error);
    blue.detuning_bar = 0.0;
    CHECK_THROWS_AS(doppler_temperature(fig4.atom, blue), std::domain_error);
}

TEST_CASE("cavity-mode decay of the excited state") {
    const OperatingPoint pt = run_preset("fig4");
    ModeSpec m = mode_offset(pt, 2.0);
    m.kappa = 0.1 * pt.atom.gamma;

    SUBCASE("zero coupling gives zero") {
        ModeSpec uncoupled = m;
        uncoupled.alpha = 0.0;
        CHECK(gamma_a_total(pt.atom, {uncoupled}, {}) == 0.0);
    }

    SUBCASE("single far-detuned mode matches the hand evaluation") {
        CHECK(rel_err(gamma_a_total(pt.atom, {m}, {}), 0.0029593865615469318) < 1e-12);
    }

    SUBCASE("mode decay is negligible against the natural linewidth") {
        CHECK(gamma_a_total(pt.atom, {m}, {}) < 0.01 * pt.atom.gamma);
    }

    SUBCASE("resonant scalar formula") {
        // place the mode so the emission is energy-conserving at p = 0
        ModeSpec res = m;
        res.omega_q = pt.atom.omega_a -
                      recoil_energy(res.q, pt.atom.mass) / constants::hbar;
        CHECK(rel_err(gamma_a_total(pt.atom, {res}, {}),
                      8.0 * constants::pi * res.alpha * res.alpha / res.kappa) <
              1e-12);
    }

    SUBCASE("kappa must be positive") {
        ModeSpec lossless = m;
        lossless.kappa = 0.0;
        CHECK_THROWS_AS(gamma_a_total(pt.atom, {lossless}, {}),
                        std::invalid_argument);
    }
}

TEST_CASE("effective couplings") {
    const OperatingPoint pt = run_preset("fig4");
    const ModeSpec m = mode_offset(pt, 2.0);
    const double g = pt.atom.gamma;

    const std::complex<double> rp =
        coupling_r(CouplingKind::laser_to_mode, {}, pt.atom, pt.drive, m);
    const double dl = pt.drive.detuning_bar;
    CHECK(rel_err(std::norm(rp), m.alpha * m.alpha * pt.drive.omega *
                                     pt.drive.omega / (dl * dl + 0.25 * g * g)) <
          1e-13);

    // R- at rest equals R+ with the laser detuning replaced by the mode's
    const std::complex<double> rm =
        coupling_r(CouplingKind::mode_to_laser, {}, pt.atom, pt.drive, m);
    const double dq = shifted_detunings(pt.atom, pt.drive, m).dbar_q;
    CHECK(rel_err(std::norm(rm), m.alpha * m.alpha * pt.drive.omega *
                                     pt.drive.omega / (dq * dq + 0.25 * g * g)) <
          1e-13);

    ModeSpec uncoupled = m;
    uncoupled.alpha = 0.0;
    CHECK(std::abs(coupling_r(CouplingKind::laser_to_mode, {}, pt.atom, pt.drive,
                              uncoupled)) == 0.0);
}

TEST_CASE("broadened delta") {
    CHECK_THROWS_AS(broadened_delta(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(broadened_delta(1.0, -2.0), std::domain_error);
    CHECK(rel_err(broadened_delta(0.0, 3.0), 2.0 / (constants::pi * 3.0)) < 1e-14);
    // one full width off peak: (w/2pi)/(w^2 + w^2/4) = 2/(5 pi w)
    CHECK(rel_err(broadened_delta(3.0, 3.0), 2.0 / (5.0 * constants::pi * 3.0)) <
          1e-14);

    // unit normalization by adaptive quadrature; the window must be wide
    // enough that the Lorentzian tails carry less than the tolerance
    const double w = 0.37;
    const auto area = numerics::integrate_adaptive(
        [w](double x) { return broadened_delta(x, w); }, -2e6, 2e6, 1e-9, 0.0,
        {-8 * w, -w, 0.0, w, 8 * w, -100 * w, 100 * w, -1e4 * w, 1e4 * w});
    CHECK(std::abs(area.value - 1.0) < 1e-6);
}

TEST_CASE("closed-form rates at the reference point") {
    const OperatingPoint pt = run_preset("fig4");

    const ModeSpec m2 = mode_offset(pt, 2.0);
    CHECK(rel_err(lambda_plus_closed(pt.atom, pt.drive, m2, pt.temperature),
                  0.81698792835830336) < 1e-6);
    CHECK(rel_err(lambda_minus_closed(pt.atom, pt.drive, m2, pt.temperature),
                  0.83807011613178017) < 1e-6);

    const ModeSpec mm1 = mode_offset(pt, -1.0);
    CHECK(rel_err(lambda_plus_closed(pt.atom, pt.drive, mm1, pt.temperature),
                  1.028134518564386) < 1e-6);
    CHECK(rel_err(lambda_minus_closed(pt.atom, pt.drive, mm1, pt.temperature),
                  1.0151204636037761) < 1e-6);
}

TEST_CASE("detailed balance identity of the closed forms") {
    rng::Stream rng(42);
    for (int i = 0; i < 100; ++i) {
        const OperatingPoint pt = random_point(rng);
        const ScaledPoint sp = make_scaled_point(pt);
        const double lp = detail::lambda_plus_closed_core(sp);
        const double lm = detail::lambda_minus_closed_core(sp);
        const double expected = std::exp(sp.domega / sp.tau);
        CHECK(rel_err(lm / lp, expected) < 1e-10);

        // both Lorentzian denominators sit at the same shifted detuning
        const double det_p = sp.dbar_l - sp.doppler(sp.p0() * sp.n_dot_kl);
        const double det_m = sp.dbar_q - sp.doppler(sp.p0_prime() * sp.n_dot_q);
        CHECK(rel_err(det_p, det_m) < 1e-8);

        // energy bookkeeping of the two resonant momenta
        const double lhs =
            (sp.p0_prime() * sp.p0_prime() - sp.p0() * sp.p0()) * sp.recoil;
        CHECK(std::abs(lhs + sp.domega) <
              1e-8 * std::max(1.0, std::abs(sp.domega)));
    }
}

TEST_CASE("resonant momentum roots") {
    const OperatingPoint pt = run_preset("fig4");
    const ScaledPoint probe = make_scaled_point(pt);

    // offset chosen so the emission root sits at zero (up to the rounding of
    // the optical-frequency reconstruction, ~1e-6 Gamma)
    const double offset = -2.0 * probe.recoil;  // = -E_r(kv)/hbar in Gamma
    const ScaledPoint sp0 = make_scaled_point(pt.atom, pt.drive,
                                              mode_offset(pt, offset), pt.temperature);
    CHECK(std::abs(sp0.p0()) < 1e-4);
    CHECK(rel_err(std::exp(-sp0.p0() * sp0.p0() * sp0.recoil / sp0.tau), 1.0) <
          1e-12);

    // equal-frequency case: symmetric roots of magnitude kv/2
    const ScaledPoint spq = make_scaled_point(pt.atom, pt.drive, mode_offset(pt, 0.0),
                                              pt.temperature);
    CHECK(rel_err(-spq.p0(), spq.p0_prime()) < 1e-4);
    CHECK(rel_err(spq.p0_prime(), 0.5 * spq.kv) < 1e-4);
}

TEST_CASE("bath scattering loss") {
    const OperatingPoint pt = run_preset("fig4");
    const ModeSpec m2 = mode_offset(pt, 2.0);

    const BathLossRates rates =
        lambda_minus_bath(pt.atom, pt.drive, m2, pt.temperature);
    CHECK(rel_err(rates.approximate, 0.0047074363650423017) < 1e-6);
    CHECK(rel_err(rates.integrated, 0.0047093551660612265) < 1e-6);
    // far detuned: Doppler averaging is a sub-percent correction
    CHECK(rel_err(rates.integrated, rates.approximate) < 0.01);

    SUBCASE("zero coupling") {
        ModeSpec uncoupled = m2;
        uncoupled.alpha = 0.0;
        const BathLossRates z =
            lambda_minus_bath(pt.atom, pt.drive, uncoupled, pt.temperature);
        CHECK(z.integrated == 0.0);
        CHECK(z.approximate == 0.0);
    }

    SUBCASE("cold limit approaches the Doppler-free form") {
        const BathLossRates cold =
            lambda_minus_bath(pt.atom, pt.drive, m2, pt.temperature * 1e-8);
        CHECK(rel_err(cold.integrated, cold.approximate) < 1e-6);
    }
}

TEST_CASE("broadened-delta momentum average") {
    const OperatingPoint pt = run_preset("fig4");
    const ModeSpec m2 = mode_offset(pt, 2.0);

    SUBCASE("no drive gives zero") {
        DriveSpec off = pt.drive;
        off.omega = 0.0;
        CHECK(lambda_plus_numeric(pt.atom, off, m2, pt.temperature) == 0.0);
    }

    SUBCASE("agrees with the closed form in the validity region") {
        const double numeric =
            lambda_plus_numeric(pt.atom, pt.drive, m2, pt.temperature);
        const double closed =
            lambda_plus_closed(pt.atom, pt.drive, m2, pt.temperature);
        CHECK(rel_err(numeric, closed) < 0.01);
        // frozen value from an independent reduction of the same integral
        CHECK(rel_err(numeric, 0.81536835572) < 1e-3);
    }

    SUBCASE("narrowing the lifetime broadening approaches the closed form") {
        const double closed =
            lambda_plus_closed(pt.atom, pt.drive, m2, pt.temperature);
        double prev_gap = 1.0;
        for (double scale : {1.0, 0.25, 0.0625}) {
            QuadratureOptions opt;
            opt.width_scale = scale;
            const double numeric =
                lambda_plus_numeric(pt.atom, pt.drive, m2, pt.temperature, opt);
            const double gap = rel_err(numeric, closed);
            CHECK(gap < 0.01);
            CHECK(gap < prev_gap);
            prev_gap = gap;
        }
    }

    SUBCASE("weaker drive pulls numeric and closed together") {
        // the lifetime broadening scales as Omega^2 while both rates carry the
        // same Omega^2 prefactor
        DriveSpec weak = pt.drive;
        weak.omega = 0.1 * pt.drive.omega;
        const double numeric = lambda_plus_numeric(pt.atom, weak, m2, pt.temperature);
        const double closed = lambda_plus_closed(pt.atom, weak, m2, pt.temperature);
        CHECK(rel_err(numeric, closed) < 0.001);
    }

    SUBCASE("absorption average agrees with its closed form") {
        const double numeric =
            lambda_minus_numeric(pt.atom, pt.drive, m2, pt.temperature);
        const double closed =
            lambda_minus_closed(pt.atom, pt.drive, m2, pt.temperature);
        CHECK(rel_err(numeric, closed) < 0.01);
    }
}

TEST_CASE("monte carlo cross-check of the momentum average") {
    // independent 3D Gaussian-sample estimate of the same integral
    rng::Stream seeds(2024);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const OperatingPoint pt = random_point(seeds);
        const ScaledPoint sp = make_scaled_point(pt);
        const double numeric = detail::lambda_plus_numeric_core(sp, {});

        rng::Stream rng(1000 + trial);
        const std::size_t n_samples = (trial == 0) ? 10000000 : 1000000;
        double s1 = 0.0, s2 = 0.0;
        const double sin_n = std::sqrt(1.0 - sp.n_dot_kl * sp.n_dot_kl);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double x = sp.sigma_p * rng.normal();
            const double y = sp.sigma_p * rng.normal();
            const double u = sp.n_dot_kl * x + sin_n * y;
            const double eps = sp.gamma_ground(x) +
                               sp.gamma_ground(x + sp.kv * sp.n_dot_kl);
            // energy mismatch of the emission channel at this momentum
            const double d = -2.0 * sp.recoil * sp.kv * u -
                             sp.recoil * sp.kv * sp.kv - sp.domega;
            const double det = sp.dbar_l - sp.doppler(x);
            const double r2 = sp.alpha * sp.alpha * sp.omega * sp.omega /
                              (det * det + 0.25);
            const double v = r2 * eps / (d * d + 0.25 * eps * eps);
            s1 += v;
            s2 += v * v;
        }
        const double mc = s1 / n_samples;
        const double se = std::sqrt((s2 / n_samples - mc * mc) / n_samples);
        CHECK(std::abs(numeric - mc) < 3.0 * se);
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("rate bundle") {
    const OperatingPoint pt = run_preset("fig4");
    const ModeSpec m2 = mode_offset(pt, 2.0);

    SUBCASE("zero couplings give zero rates") {
        ModeSpec uncoupled = m2;
        uncoupled.alpha = 0.0;
        DriveSpec off = pt.drive;
        off.omega = 0.0;
        const RateSet rs = assemble_rates(pt.atom, off, uncoupled, pt.temperature);
        CHECK(rs.lambda_plus_l == 0.0);
        CHECK(rs.lambda_minus_l == 0.0);
        CHECK(rs.lambda_minus_b == 0.0);
    }

    SUBCASE("fields satisfy the balance ratio") {
        const RateSet rs = assemble_rates(pt.atom, pt.drive, m2, pt.temperature);
        const double beta = 1.0 / (constants::k_boltzmann * rs.temperature);
        CHECK(rel_err(rs.lambda_minus_l / rs.lambda_plus_l,
                      std::exp(beta * constants::hbar * rs.omega_rel)) < 1e-10);
        // the stored momenta satisfy their energy-conservation conditions
        const double kv = m2.momentum_transfer(pt.drive);
        const double lhs_p0 = rs.p0 * kv / pt.atom.mass +
                              constants::hbar * kv * kv / (2.0 * pt.atom.mass) +
                              rs.omega_rel;
        const double lhs_p0p = rs.p0_prime * kv / pt.atom.mass -
                               constants::hbar * kv * kv / (2.0 * pt.atom.mass) +
                               rs.omega_rel;
        CHECK(std::abs(lhs_p0) < 1e-10 * std::abs(rs.omega_rel));
        CHECK(std::abs(lhs_p0p) < 1e-10 * std::abs(rs.omega_rel));
    }

    SUBCASE("serialization round trip") {
        const RateSet rs = assemble_rates(pt.atom, pt.drive, m2, pt.temperature);
        nlohmann::json j{{"lambda_plus_l", rs.lambda_plus_l},
                         {"lambda_minus_l", rs.lambda_minus_l},
                         {"lambda_minus_b", rs.lambda_minus_b},
                         {"kappa_q", rs.kappa_q},
                         {"p0", rs.p0},
                         {"p0_prime", rs.p0_prime},
                         {"temperature", rs.temperature},
                         {"omega_rel", rs.omega_rel}};
        const auto back = nlohmann::json::parse(j.dump());
        CHECK(back.at("lambda_plus_l").get<double>() == rs.lambda_plus_l);
        CHECK(back.at("p0").get<double>() == rs.p0);
        CHECK(back.at("omega_rel").get<double>() == rs.omega_rel);
    }
}

TEST_CASE("rates are nonnegative across random inputs") {
    rng::Stream rng(77);
    for (int i = 0; i < 50; ++i) {
        const OperatingPoint pt = random_point(rng);
        const RateSet rs = assemble_rates(pt.atom, pt.drive, pt.mode, pt.temperature);
        CHECK(rs.lambda_plus_l >= 0.0);
        CHECK(rs.lambda_minus_l >= 0.0);
        CHECK(rs.lambda_minus_b >= 0.0);
        CHECK(rs.kappa_q >= 0.0);
        const BathLossRates bath =
            lambda_minus_bath(pt.atom, pt.drive, pt.mode, pt.temperature);
        CHECK(bath.integrated >= 0.0);
    }
}

TEST_CASE("degenerate geometry is rejected") {
    const OperatingPoint pt = run_preset("fig4");
    ModeSpec collinear = pt.mode;
    collinear.q = pt.drive.k_l;
    collinear.theta = 0.0;  // |k_L - q| = 0
    CHECK_THROWS_AS(lambda_plus_closed(pt.atom, pt.drive, collinear, pt.temperature),
                    std::invalid_argument);
}
