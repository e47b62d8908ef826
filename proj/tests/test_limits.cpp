#include <doctest.h>

#include <cmath>

#include "hierspin/limits.hpp"

using namespace hierspin;

namespace {

double fixed_point(double beta, double x, double offset = 0.0) {
    double m = 0.5;
    for (int i = 0; i < 10000; ++i) m = std::tanh(beta * (x + m) + offset);
    return m;
}

double bisect_g(double beta, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (jump_function_g(beta, lo) * jump_function_g(beta, mid) <= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("invariant curve") {
    CHECK(invariant_curve(0.5, 0.0) == doctest::Approx(0.0));
    const double m = invariant_curve(0.5, 1.0);
    CHECK(m == doctest::Approx(fixed_point(0.5, 1.0)).epsilon(1e-10));
    CHECK(m == doctest::Approx(0.68789).epsilon(1e-5));
    const auto cp = critical_points(2.0);
    CHECK(invariant_curve(2.0, cp.lambdaA - cp.mA, 0.0, Branch::upper) == doctest::Approx(cp.mA).epsilon(1e-6));
    CHECK(branch_exists(2.0, -1.0, 0.0, Branch::upper) == false);
    CHECK_THROWS_AS(invariant_curve(2.0, -1.0, 0.0, Branch::upper), NoSuchBranch);
    CHECK(invariant_curve(0.5, 1.0, 0.3) == doctest::Approx(fixed_point(0.5, 1.0, 0.3)).epsilon(1e-10));
}

TEST_CASE("critical points") {
    const auto c2 = critical_points(2.0);
    CHECK(c2.lambdaA == doctest::Approx(0.440687).epsilon(1e-6));
    CHECK(c2.mA == doctest::Approx(0.707107).epsilon(1e-6));
    CHECK(critical_points(4.0).mA == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(critical_points(1.0 + 1e-9).mA < 1e-4);
    CHECK_THROWS_AS(critical_points(1.0), DomainError);
    for (double b : {1.01, 1.1, 2.0, 5.0}) {
        const auto c = critical_points(b);
        CHECK(std::abs(c.mA - std::tanh(b * c.lambdaA)) < 1e-12);
        CHECK(std::abs(b * (1 - c.mA * c.mA) - 1.0) < 1e-12);
        CHECK(std::abs(jump_function_g(b, c.mA)) < 1e-10);
    }
}

TEST_CASE("jump target") {
    const double mb = jump_target(2.0);
    CHECK(mb == doctest::Approx(bisect_g(2.0, -1.0 + 1e-15, -critical_points(2.0).mA - 1e-9)).epsilon(1e-10));
    CHECK(std::abs(mb + 0.9868) < 1e-3);
    CHECK(jump_target(50.0) < -0.999999);
    const auto d = jump_target_detail(10.0);
    CHECK(d.residual < 1e-10);
    CHECK(d.mB < -critical_points(10.0).mA);
}

TEST_CASE("mean-field ode") {
    const auto flat = meanfield_ode(2.0, 0.0, 0.0, 2.0);
    CHECK(flat.m.back() == doctest::Approx(0.0));
    const double lam = 0.4;
    const auto on = meanfield_ode(0.5, lam, std::tanh(0.5 * lam), 2.0);
    CHECK(on.m.back() == doctest::Approx(std::tanh(0.5 * lam)).epsilon(1e-9));
    const auto conv = meanfield_ode(0.5, 1.0, 0.0, 40.0);
    CHECK(conv.m.back() == doctest::Approx(invariant_curve(0.5, 1.0)).epsilon(1e-5));
    const auto cw = curie_weiss_ode(0.6, 0.5, 30.0);
    CHECK(std::abs(cw.m.back()) < 1e-3);
}

TEST_CASE("order-1 profile dynamics") {
    const GaussianMeasure mu{0.0, 1.0};
    auto g0 = GridProfile::uniform(mu, -8.0, 8.0, 161, 0.4);
    const auto path = order1_profile_ode(0.0, 0.0, mu, 0.0, g0, 1.0, 1e-3, 1000);
    for (double v : path.profiles.back().values) CHECK(v == doctest::Approx(0.4 * std::exp(-2.0)).epsilon(1e-6));
}

TEST_CASE("equilibrium and conditional law") {
    const auto eq = equilibrium_profile(0.3, 0.3, {2.0, 0.5}, 2.0);
    CHECK(eq.M > 0.9);
    CHECK(eq.M == doctest::Approx(orderN2_law(0.3, 0.3, 1.0, 1.0, 2.0, 1.0, LawMode::conditional)).epsilon(1e-8));
    const double law = orderN2_law(0.3, 0.3, 1.0, 1.0, 2.0, 1.0, LawMode::conditional);
    CHECK(law == doctest::Approx(0.94).epsilon(0.01));
    CHECK(orderN2_law(0.3, 0.3, 1.0, 1.0, 0.0, 1.0, LawMode::conditional) == doctest::Approx(0.0).epsilon(1e-12));
    const auto sym = equilibrium_profile(0.3, 0.3, {0.0, 0.5}, 0.0);
    CHECK(std::abs(sym.M) < 1e-10);
}

TEST_CASE("averaging fixed point") {
    const std::vector<double> samples{-1.0, -0.5, 0.5, 1.0};
    auto odd = [](double xi, double, double U, double M) { return std::tanh(0.3 * (xi + U + M)); };
    CHECK(std::abs(averaging_fixed_point(odd, samples, 0.0, 0.0)) < 1e-12);
    auto constant = [](double xi, double, double, double) { return 0.1 * xi; };
    CHECK(averaging_fixed_point(constant, std::vector<double>{1.0, 2.0, 3.0}, 0.0, 0.0) == doctest::Approx(0.2));
}

TEST_CASE("renormalization") {
    const auto L = renormalization_ledger({0.3, 0.3}, 2);
    REQUIRE(L.size() == 3);
    CHECK(L[0] == 1.0);
    CHECK(L[1] == doctest::Approx(1.0 / 0.7));
    CHECK_THROWS_AS(renormalization_ledger({0.6, 0.6}, 2), DomainError);
    const auto p = ModelParams::hierarchical(2, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    CHECK(renormalization_map(1, p, 0.5, 0.0, 1.0).value == doctest::Approx(invariant_curve(0.3, 0.5)).epsilon(1e-9));
}

TEST_CASE("hitting time law") {
    CHECK(hitting_time_cdf(1.0, 0.0, 1.0, 1.0) == doctest::Approx(0.31731).epsilon(1e-5));
    CHECK(hitting_time_cdf(0.0, 0.0, 1.0, 0.5) == 1.0);
    CHECK(hitting_time_cdf(1.0, 0.0, 1.0, 0.0) == 0.0);
    CHECK(hitting_time_cdf(1.0, 0.0, 1.0, 1e12) > 0.999);
}

TEST_CASE("limit sde") {
    const auto path = limit_sde_meanfield(2.0, 2.0, 0.9, 5.0, {1, 0}, SdeRegime::supercritical);
    const double mb = jump_target(2.0);
    for (double a : path.arrivals) CHECK(std::abs(std::abs(a) - std::abs(mb)) < 1e-9);
    const auto sub = limit_sde_meanfield(0.5, 1.0, 0.2, 1.0, {1, 0}, SdeRegime::subcritical);
    for (double m : sub.m) REQUIRE(std::abs(m) < 1.0);
    const auto h = limit_sde_hier_orderN(0.5, 1.0, 1.0, 1.0, {2, 0}, 1e-4);
    CHECK(std::abs(h.mCurve.back() - h.mEuler.back()) < 0.02);
}
