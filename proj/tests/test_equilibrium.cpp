#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "photherm/equilibrium.hpp"
#include "photherm/rng.hpp"

using namespace photherm;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

RateSet loss_free_rates(double lambda_plus, double beta_homega) {
    RateSet rs;
    rs.lambda_plus_l = lambda_plus;
    rs.lambda_minus_l = lambda_plus * std::exp(beta_homega);
    rs.lambda_minus_b = 0.0;
    rs.kappa_q = 0.0;
    return rs;
}

}  // namespace

TEST_CASE("occupation from the balance condition") {
    SUBCASE("ratio two gives unit occupation") {
        const NbarResult r = solve_nbar(loss_free_rates(1.0, std::log(2.0)));
        CHECK(!r.divergent);
        CHECK(rel_err(r.nbar, 1.0) < 1e-14);
    }

    SUBCASE("loss-free occupation is the Bose function") {
        for (double x = 0.1; x <= 10.0; x += 0.31) {
            const NbarResult r = solve_nbar(loss_free_rates(0.37, x));
            CHECK(rel_err(r.nbar, 1.0 / std::expm1(x)) < 1e-10);
        }
    }

    SUBCASE("emission exceeding total absorption diverges") {
        RateSet rs = loss_free_rates(1.0, 0.5);
        rs.lambda_minus_l = 0.9;
        const NbarResult r = solve_nbar(rs);
        CHECK(r.divergent);
        CHECK(std::isinf(r.nbar));
    }

    SUBCASE("cavity loss enters the denominator") {
        RateSet rs = loss_free_rates(1.0, std::log(2.0));
        rs.kappa_q = 1.0;  // denominator 2 + 1 - 1 = 2
        CHECK(rel_err(solve_nbar(rs).nbar, 0.5) < 1e-14);
    }
}

TEST_CASE("effective temperature from the occupation") {
    // ideal loss-free case: beta_eff equals the atomic beta at zero shift
    const double beta = 2.7e22;  // 1/J
    for (double homega : {1e-28, 3e-27, 2e-26}) {
        const double nbar = 1.0 / std::expm1(beta * homega);
        CHECK(rel_err(effective_temperature_beta(nbar, homega, 0.0), beta) < 1e-10);
    }
    // loss-free with beta*homega = 1: beta_eff * homega = 1
    const double homega = 5e-28;
    const double nbar = 1.0 / std::expm1(1.0);
    CHECK(rel_err(effective_temperature_beta(nbar, homega, 0.0) * homega, 1.0) <
          1e-12);

    CHECK_THROWS_AS(effective_temperature_beta(0.7, -1e-28, 1e-28),
                    std::domain_error);
    CHECK_THROWS_AS(effective_temperature_beta(-0.1, 1e-28, 0.0),
                    std::domain_error);
}

TEST_CASE("validity margins") {
    const OperatingPoint fig4 = run_preset("fig4");

    SUBCASE("frozen values at the reference drive") {
        const ValidityMargins m =
            validity_margins(fig4.atom, fig4.drive, fig4.mode, fig4.temperature);
        CHECK(rel_err(m.high_t, 0.0039149752435792941) < 1e-10);
        CHECK(rel_err(m.small_loss, 0.010362565061313099) < 1e-10);
        CHECK(rel_err(m.chain35_left, 3.0654062315677529e-05) < 1e-10);
        CHECK(rel_err(m.chain35_right, 5.3691377324973456e-05) < 1e-10);
        CHECK(rel_err(m.excitation, 0.099999492883893218) < 1e-10);
        CHECK(m.all_ok());
        CHECK(m.as_map().size() == 5);
    }

    SUBCASE("weak drive satisfies high_t but violates small_loss") {
        DriveSpec weak = fig4.drive;
        weak.omega = 1e-3 * fig4.atom.gamma;
        const ValidityMargins m =
            validity_margins(fig4.atom, weak, fig4.mode, fig4.temperature);
        CHECK(m.high_t < 1e-8);
        CHECK(m.small_loss > 1e3);
        CHECK(!m.all_ok());
    }

    SUBCASE("standard detuning violates the loss condition") {
        const OperatingPoint std_pt = run_preset("standard");
        const ValidityMargins m = validity_margins(std_pt.atom, std_pt.drive,
                                                   std_pt.mode, std_pt.temperature);
        CHECK(m.small_loss > 1.0);
        CHECK(!m.all_ok());
    }
}

TEST_CASE("chemical-potential shift and critical drive") {
    const OperatingPoint fig4 = run_preset("fig4");
    const double abs_dl = std::abs(fig4.drive.detuning_bar);
    const double hg = constants::hbar * fig4.atom.gamma;

    SUBCASE("critical drive matches the independent evaluation") {
        const DeltaMuResult dm = delta_mu_and_critical(fig4.atom, fig4.drive,
                                                       fig4.mode, fig4.temperature);
        CHECK(rel_err(dm.omega_c / abs_dl, 0.045770) < 1e-3);
        // frozen roots at Omega = 0.1 |detuning|
        REQUIRE(dm.delta_mu.has_value());
        CHECK(rel_err(*dm.delta_mu / hg, 0.327245) < 1e-4);
        REQUIRE(dm.delta_mu_right.has_value());
        CHECK(rel_err(*dm.delta_mu_right / hg, 6.2053) < 1e-4);
        CHECK(*dm.delta_mu < dm.g_argmin);
        CHECK(dm.g_argmin < *dm.delta_mu_right);
        CHECK(dm.g_min < 0.0);
    }

    SUBCASE("strong drive pushes the shift toward zero") {
        DriveSpec strong = fig4.drive;
        strong.omega = 100.0 * abs_dl;
        const DeltaMuResult dm = delta_mu_and_critical(fig4.atom, strong, fig4.mode,
                                                       fig4.temperature);
        REQUIRE(dm.delta_mu.has_value());
        CHECK(*dm.delta_mu > 0.0);
        CHECK(*dm.delta_mu / hg < 1e-4);
    }

    SUBCASE("below the critical drive there is no root") {
        DriveSpec weak = fig4.drive;
        weak.omega = 0.5 * 0.04577 * abs_dl;
        const DeltaMuResult dm = delta_mu_and_critical(fig4.atom, weak, fig4.mode,
                                                       fig4.temperature);
        CHECK(!dm.delta_mu.has_value());
        CHECK(dm.g_min > 0.0);
        CHECK(dm.g_argmin > 0.0);
    }

    SUBCASE("sign-change scan agrees with the root count") {
        const ScaledPoint sp = make_scaled_point(fig4);
        const DeltaMuResult ref = delta_mu_and_critical(fig4.atom, fig4.drive,
                                                        fig4.mode, fig4.temperature);
        for (double frac : {0.5, 0.9, 1.05, 1.5, 3.0}) {
            detail::LossBalance lb = detail::make_loss_balance(sp);
            const double om = frac * ref.omega_c / fig4.atom.gamma;
            lb.coeff *= std::pow(sp.omega / om, 2);
            const double upper = lb.upper_bracket();
            int sign_changes = 0;
            double prev = lb.g(upper * 1e-9);
            for (int i = 1; i <= 10000; ++i) {
                const double cur = lb.g(upper * i / 10000.0);
                if ((prev < 0.0) != (cur < 0.0)) ++sign_changes;
                prev = cur;
            }
            CHECK(sign_changes == (frac > 1.0 ? 2 : 0));
        }
    }

    SUBCASE("blue detuning is rejected") {
        DriveSpec blue = fig4.drive;
        blue.detuning_bar = +abs_dl;
        CHECK_THROWS_AS(delta_mu_and_critical(fig4.atom, blue, fig4.mode, 1e-4),
                        std::domain_error);
    }

    SUBCASE("zero drive reports no root") {
        DriveSpec off = fig4.drive;
        off.omega = 0.0;
        const DeltaMuResult dm = delta_mu_and_critical(fig4.atom, off, fig4.mode,
                                                       fig4.temperature);
        CHECK(!dm.delta_mu.has_value());
        CHECK(std::isinf(dm.g_min));
        CHECK(dm.omega_c > 0.0);
    }
}

TEST_CASE("equilibrium point and regimes") {
    const OperatingPoint fig4 = run_preset("fig4");
    const double g = fig4.atom.gamma;

    const DeltaMuResult dm = delta_mu_and_critical(fig4.atom, fig4.drive, fig4.mode,
                                                   fig4.temperature);
    REQUIRE(dm.delta_mu.has_value());
    const double nu_left = *dm.delta_mu / constants::hbar;    // rad/s
    const double nu_right = *dm.delta_mu_right / constants::hbar;

    SUBCASE("transition temperature matches the frozen evaluation") {
        const EquilibriumPoint pt = equilibrium_point(fig4.atom, fig4.drive, fig4.mode,
                                                      fig4.temperature, 0.0);
        CHECK(rel_err(pt.t_o, 690.8937e-6) < 1e-4);
        CHECK(rel_err(pt.t_o / fig4.temperature, 1.018807) < 1e-4);
    }

    SUBCASE("gain exactly between the balance roots") {
        for (double nu : {0.5 * nu_left, 0.99 * nu_left}) {
            const EquilibriumPoint pt = equilibrium_point(
                fig4.atom, fig4.drive, fig4.mode, fig4.temperature, nu);
            CHECK(!pt.divergent);
        }
        for (double nu :
             {1.01 * nu_left, 0.5 * (nu_left + nu_right), 0.99 * nu_right}) {
            const EquilibriumPoint pt = equilibrium_point(
                fig4.atom, fig4.drive, fig4.mode, fig4.temperature, nu);
            CHECK(pt.divergent);
            CHECK(pt.regime == Regime::gain);
        }
        const EquilibriumPoint beyond = equilibrium_point(
            fig4.atom, fig4.drive, fig4.mode, fig4.temperature, 1.01 * nu_right);
        CHECK(!beyond.divergent);
        CHECK(beyond.regime == Regime::quasithermal);
    }

    SUBCASE("occupation decreases away from the gain boundary") {
        double prev = std::numeric_limits<double>::infinity();
        for (double nu = 0.95 * nu_left; nu > -10.0 * g; nu -= 0.25 * g) {
            const EquilibriumPoint pt = equilibrium_point(
                fig4.atom, fig4.drive, fig4.mode, fig4.temperature, nu);
            REQUIRE(!pt.divergent);
            CHECK(pt.nbar <= prev * (1.0 + 1e-12));
            prev = pt.nbar;
        }
    }

    SUBCASE("near the transition the point is thermal") {
        const EquilibriumPoint pt = equilibrium_point(
            fig4.atom, fig4.drive, fig4.mode, fig4.temperature, nu_left - 1e-3 * g);
        CHECK(!pt.divergent);
        CHECK(pt.regime == Regime::gce);
        CHECK(std::abs(std::log10(pt.t_eff / pt.t_o)) < 0.05);
    }

    SUBCASE("classification is total") {
        EquilibriumPoint pt;
        pt.error = "boom";
        CHECK(classify_regime(pt, 1.0) == Regime::invalid);
        pt.error.clear();
        pt.divergent = true;
        CHECK(classify_regime(pt, 1.0) == Regime::gain);
        pt.divergent = false;
        pt.t_eff = 1.0;
        pt.t_o = 1.0;
        pt.rabi = 2.0;
        CHECK(classify_regime(pt, 1.0) == Regime::gce);
        pt.rabi = 0.5;  // below critical drive
        CHECK(classify_regime(pt, 1.0) == Regime::quasithermal);
        pt.rabi = 2.0;
        pt.t_eff = 0.1;  // outside the half-decade band
        CHECK(classify_regime(pt, 1.0) == Regime::quasithermal);
        pt.t_eff = std::numeric_limits<double>::quiet_NaN();
        CHECK(classify_regime(pt, 1.0) == Regime::quasithermal);
    }

    SUBCASE("ideal loss-free behavior recovers the atomic temperature") {
        const double beta = 1.0 / (constants::k_boltzmann * fig4.temperature);
        for (double x : {0.3, 1.0, 2.5}) {
            const double nbar = 1.0 / std::expm1(x);
            const double beta_eff = effective_temperature_beta(nbar, x / beta, 0.0);
            CHECK(rel_err(beta_eff, beta) < 1e-10);
        }
    }
}

TEST_CASE("phase diagram") {
    const OperatingPoint fig4 = run_preset("fig4");
    const double g = fig4.atom.gamma;
    std::vector<double> rabi, omega_rel;
    for (int i = 0; i < 8; ++i) rabi.push_back((4.0 + 3.0 * i) * g);
    for (int j = 0; j < 21; ++j) omega_rel.push_back((-4.0 + 0.5 * j) * g);

    SUBCASE("deterministic across thread counts") {
        const PhaseDiagram a =
            phase_diagram(fig4.atom, fig4.drive, fig4.mode, rabi, omega_rel, 1);
        const PhaseDiagram b =
            phase_diagram(fig4.atom, fig4.drive, fig4.mode, rabi, omega_rel, 4);
        REQUIRE(a.cells.size() == b.cells.size());
        for (size_t i = 0; i < a.cells.size(); ++i) {
            CHECK(a.cells[i].nbar == b.cells[i].nbar);
            CHECK(a.cells[i].regime == b.cells[i].regime);
            // NaN t_eff (below critical drive) must match bitwise
            CHECK((a.cells[i].t_eff == b.cells[i].t_eff ||
                   (std::isnan(a.cells[i].t_eff) && std::isnan(b.cells[i].t_eff))));
        }
    }

    SUBCASE("every cell is classified") {
        const PhaseDiagram pd =
            phase_diagram(fig4.atom, fig4.drive, fig4.mode, rabi, omega_rel, 2);
        int counts[4] = {0, 0, 0, 0};
        for (const auto& cell : pd.cells) counts[static_cast<int>(cell.regime)] += 1;
        CHECK(counts[static_cast<int>(Regime::invalid)] == 0);
        CHECK(counts[static_cast<int>(Regime::gain)] > 0);
        CHECK(counts[static_cast<int>(Regime::gce)] > 0);
        CHECK(counts[static_cast<int>(Regime::quasithermal)] > 0);
    }

    SUBCASE("cell errors are data, not exceptions") {
        DriveSpec blue = fig4.drive;
        blue.detuning_bar = +std::abs(fig4.drive.detuning_bar);
        const PhaseDiagram pd = phase_diagram(fig4.atom, blue, fig4.mode,
                                              {4.0 * g, 8.0 * g}, {-1.0 * g, 1.0 * g}, 1);
        for (const auto& cell : pd.cells) {
            CHECK(cell.regime == Regime::invalid);
            CHECK(!cell.error.empty());
        }
    }

    SUBCASE("grids must be strictly increasing") {
        CHECK_THROWS_AS(phase_diagram(fig4.atom, fig4.drive, fig4.mode,
                                      {2.0 * g, 2.0 * g}, {0.0, 1.0}, 1),
                        std::invalid_argument);
    }
}
