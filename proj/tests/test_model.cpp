#include "thermoporo/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace thermoporo;

TEST_CASE("content functionals") {
    {
        const auto [psi, phi] = content_functionals(regime(Regime::PR1), 0, 0, 0);
        CHECK(psi == 0.0);
        CHECK(phi == 0.0);
    }
    {
        const auto [psi, phi] = content_functionals(regime(Regime::PR1), 1, 1, 1);
        CHECK(psi == doctest::Approx(2.0));
        CHECK(phi == doctest::Approx(2.0));
    }
    {
        const auto [psi, phi] = content_functionals(regime(Regime::PR5), 1, 0, 0);
        CHECK(psi == doctest::Approx(-0.1));
        CHECK(phi == doctest::Approx(0.2));
    }
}

TEST_CASE("stabilization from theory") {
    {
        PhysParams pp = regime(Regime::PR1);
        pp.alpha = pp.beta = 0.0;
        const auto [lt, lp] = stabilization_from_theory(pp);
        CHECK(lt == 0.0);
        CHECK(lp == 0.0);
    }
    {
        const auto [lt, lp] = stabilization_from_theory(regime(Regime::PR1));
        CHECK(lp == doctest::Approx(20.0 / 3.0).epsilon(1e-14));
        CHECK(lt == doctest::Approx(20.0 / 3.0).epsilon(1e-14));
    }
    {
        const auto [lt, lp] = stabilization_from_theory(regime(Regime::PR5));
        CHECK(lp == doctest::Approx(1.0 / 15.0).epsilon(1e-14));
        CHECK(lt == doctest::Approx(1.0 / 15.0).epsilon(1e-14));
    }
}

TEST_CASE("stabilization is quadratic in the coupling coefficient") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(0.1, 3.0);
    for (int k = 0; k < 50; ++k) {
        PhysParams pp = regime(Regime::PR3);
        pp.alpha = dist(rng);
        pp.mu = dist(rng);
        pp.lambda = dist(rng);
        const double s = dist(rng);
        const double lp1 = stabilization_from_theory(pp).second;
        pp.alpha *= s;
        const double lp2 = stabilization_from_theory(pp).second;
        CHECK(lp2 == doctest::Approx(s * s * lp1).epsilon(1e-12));
    }
}

TEST_CASE("time step bound") {
    PhysParams pp = regime(Regime::PR5);  // a0 = 0.2, b0 = 0.1
    pp.c_f = 0.1;
    pp.cutoff_M = 1.0;
    pp.K = 0.1 * Matrix2::Identity();
    pp.Theta = 0.1 * Matrix2::Identity();

    // k_max/theta_min = 1, huge c_omega: bound = 2*0.1 / (0.01 * 2) = 10
    CHECK(time_step_bound(pp, 1e30) == doctest::Approx(10.0).epsilon(1e-12));

    // doubling (a0 - b0) doubles the bound
    PhysParams pp2 = pp;
    pp2.a0 = 0.3;  // a0 - b0 = 0.2
    CHECK(time_step_bound(pp2, 1e30) == doctest::Approx(20.0).epsilon(1e-12));

    // tiny convective coefficient: denominator goes non-positive -> no restriction
    PhysParams pp3 = pp;
    pp3.c_f = 1e-12;
    CHECK(std::isinf(time_step_bound(pp3, 1.0)));

    CHECK_THROWS_AS(time_step_bound(pp, 0.0), std::invalid_argument);
}

TEST_CASE("time step bound monotonicity") {
    PhysParams pp = regime(Regime::PR5);
    pp.cutoff_M = 1.0;
    const double base = time_step_bound(pp, 1e30);
    PhysParams larger_cf = pp;
    larger_cf.c_f *= 2.0;
    CHECK(time_step_bound(larger_cf, 1e30) < base);
    PhysParams larger_m = pp;
    larger_m.cutoff_M *= 3.0;
    CHECK(time_step_bound(larger_m, 1e30) < base);
}

TEST_CASE("Lame conversion") {
    {
        const auto [mu, lam] = lame_from_engineering(5.94e9, 0.2, LameConvention::Alt);
        CHECK(mu == doctest::Approx(2.475e9).epsilon(1e-12));
        CHECK(lam == doctest::Approx(5.94e9 * 0.2 / (1.2 * 1.4)).epsilon(1e-12));
    }
    {
        const auto [mu, lam] = lame_from_engineering(5.94e9, 0.2, LameConvention::Standard);
        CHECK(mu == doctest::Approx(2.475e9).epsilon(1e-12));
        CHECK(lam == doctest::Approx(1.65e9).epsilon(1e-12));
    }
    {
        const auto [mu, lam] = lame_from_engineering(2.0, 0.0);
        CHECK(mu == doctest::Approx(1.0));
        CHECK(lam == 0.0);
    }
    CHECK_THROWS_AS(lame_from_engineering(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(lame_from_engineering(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(lame_from_engineering(-1.0, 0.2), std::invalid_argument);
}

TEST_CASE("parameter regimes") {
    {
        const PhysParams pp = regime(Regime::PR1);
        CHECK(pp.alpha == 1.0);
        CHECK(pp.beta == 1.0);
        CHECK(pp.b0 == 1.0);
        CHECK(pp.a0 == 2.0);
        CHECK(pp.c0 == 2.0);
    }
    {
        const PhysParams pp = regime(Regime::PR4);
        CHECK(pp.alpha == 1.0);
        CHECK(pp.beta == doctest::Approx(0.1));
        CHECK(pp.b0 == doctest::Approx(0.1));
    }
    {
        const PhysParams pp = regime(Regime::PR5);
        CHECK(pp.alpha == doctest::Approx(0.1));
        CHECK(pp.beta == doctest::Approx(0.1));
        CHECK(pp.b0 == doctest::Approx(0.1));
    }
    CHECK_THROWS_AS(regime_from_name("PR6"), std::invalid_argument);

    // every regime satisfies the coefficient constraints by construction
    for (Regime r : {Regime::PR1, Regime::PR2, Regime::PR3, Regime::PR4, Regime::PR5}) {
        const PhysParams pp = regime(r);
        CHECK(pp.c0 - pp.b0 > 0.0);
        CHECK(pp.a0 - pp.b0 > 0.0);
        CHECK_NOTHROW(pp.validate());
    }
}

TEST_CASE("parameter validation rejects broken inputs") {
    PhysParams pp = regime(Regime::PR1);
    pp.b0 = pp.c0;  // violates c0 - b0 > 0
    CHECK_THROWS_AS(pp.validate(), std::invalid_argument);

    PhysParams bad_k = regime(Regime::PR1);
    bad_k.K(0, 0) = -1.0;
    CHECK_THROWS_AS(bad_k.validate(), std::invalid_argument);

    PhysParams asym = regime(Regime::PR1);
    asym.Theta(0, 1) = 0.05;  // not symmetric
    CHECK_THROWS_AS(asym.validate(), std::invalid_argument);
}
