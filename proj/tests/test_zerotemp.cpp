#include <doctest.h>

#include <cmath>

#include "hierspin/zerotemp.hpp"

using namespace hierspin;

TEST_CASE("fixed-points region limits") {
    const GaussianMeasure narrow{0.0, 1e-14};
    CHECK(is_equilibrium(1.999, 0.0, narrow).isEquilibrium);
    CHECK_FALSE(is_equilibrium(2.001, 0.0, narrow).isEquilibrium);
    const GaussianMeasure wide{0.0, 1e14};
    CHECK(is_equilibrium(0.999, 0.0, wide).isEquilibrium);
    CHECK_FALSE(is_equilibrium(1.001, 0.0, wide).isEquilibrium);
    CHECK(is_equilibrium(0.0, 0.0, {0.0, 3.0}).isEquilibrium);
}

TEST_CASE("attractor thresholds") {
    const double r = attractor_threshold({0.0, 1.0}, Side::right);
    CHECK(r == doctest::Approx(1.9487).epsilon(1e-4));
    CHECK(r == doctest::Approx(2.0 * normal_cdf(r)).epsilon(1e-10));
    CHECK(attractor_threshold({0.0, 1.0}, Side::left) == doctest::Approx(-r));
    CHECK(attractor_threshold({0.0, 1e-14}, Side::right) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(attractor_threshold({0.0, 1e14}, Side::right) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("region borders") {
    const auto g = region_borders(3.0, 1.0, {-1.0, 0.0, 1.0});
    CHECK(g.regime == Regime::graph);
    REQUIRE(g.left[1].size() == 1);
    CHECK(g.left[1][0] == doctest::Approx(-g.right[1][0]));
    std::vector<double> Xs;
    for (int i = -300; i <= 300; ++i) Xs.push_back(i * 0.01);
    CHECK(region_borders(1.0, 3.0, Xs).regime == Regime::folded);
}

TEST_CASE("sign dynamics") {
    const GaussianMeasure mu{0.0, 1.0};
    const auto grid = GridProfile::uniform(mu, -6.0, 6.0, 1201);
    const auto stair = StaircaseProfile{0.5}.onGrid(grid);
    const auto rate = sign_vector_field(stair, 0.0);
    int moving = 0;
    for (double r : rate)
        if (r != 0.0) ++moving;
    CHECK(moving <= 1);

    const auto flat = GridProfile::uniform(mu, -6.0, 6.0, 1201, 0.25);
    const auto res = sign_dynamics(flat, 0.0, 20.0, 0.01);
    CHECK(profile_threshold(res.final) == doctest::Approx(-0.5).epsilon(0.02));
    CHECK(res.M.back() == doctest::Approx(mu.mass(-0.5, 0.5)).epsilon(0.02));
}
