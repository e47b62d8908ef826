#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hierspin/harness.hpp"
#include "hierspin/sim.hpp"

using namespace hierspin;

TEST_CASE("covariance closed forms") {
    CHECK(covariance_A(1.0, 1.0, 1.0) == doctest::Approx(1.5));
    CHECK(covariance_B(1.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(covariance_AN(1.0, 1.0, 100, 1.0, 1.0) == doctest::Approx(1.5));
    CHECK(covariance_BN(1.0, 1.0, 100, 1.0, 1.0) == doctest::Approx(1.0));
    const double s = 0.5, t = 1.0;
    CHECK(std::abs(covariance_AN(1.0, 1.0, 100, s, t) - covariance_BN(1.0, 1.0, 100, s, t)) < 1e-12);
}

TEST_CASE("statistics helpers") {
    const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.stderror == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(ks_statistic({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
    CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_pvalue(0.0, 100) == doctest::Approx(1.0));
    CHECK(ks_pvalue(1.63 / std::sqrt(400.0), 400) == doctest::Approx(0.01).epsilon(0.2));
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("parallel_for covers every index") {
    std::vector<int> hit(1000, 0);
    parallel_for(1000, [&](std::int64_t i) { hit[i] += 1; }, 4);
    for (int h : hit) REQUIRE(h == 1);
    CHECK_THROWS(parallel_for(10, [](std::int64_t i) {
        if (i == 7) throw std::runtime_error("x");
    }));
}

TEST_CASE("stat table csv") {
    StatTable t;
    t.add(100, "sup", 0.25, 0.01, 10);
    std::ostringstream os;
    write_stat_csv(os, t);
    CHECK(os.str().rfind("# schema stat/1\nN,statistic,estimate,stderr,replicas\n100,sup,", 0) == 0);
    CHECK(t.at(100, "sup").estimate == 0.25);
    CHECK_THROWS_AS(t.at(100, "none"), std::out_of_range);
}

TEST_CASE("generator consistency") {
    ModelParams p = ModelParams::hierarchical(20, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    const SystemState s = sample_initial_state(p, {3, 0});
    const auto c = generator_consistency(p, s, GeneratorTest::constant, 1e-3, 50, 1);
    CHECK(c.empirical == 0.0);
    CHECK(c.analytic == 0.0);
    const auto m = generator_consistency(p, s, GeneratorTest::topMagnetization, 0.01, 2000, 2);
    CHECK(std::abs(m.z) < 4.0);
    const auto x = generator_consistency(p, s, GeneratorTest::blockFieldSquare, 0.01, 2000, 3);
    CHECK(std::abs(x.z) < 4.0);
    CHECK(x.diffusionFiniteDifference == doctest::Approx(1.0 / 20).epsilon(1e-3));
}

TEST_CASE("contraction sweep shrinks with N") {
    ModelParams p = ModelParams::meanField(50, 0.5, 1.0);
    SweepSpec sw;
    sw.Ns = {50, 800};
    sw.replicas = 20;
    sw.timescale = TimescaleSpec::uniform(0, 0.5, 2);
    sw.masterSeed = 4;
    const auto t = contraction_stat(p, sw, 1.0);
    CHECK(t.rows.size() == 2);
    CHECK(t.rows[1].estimate < t.rows[0].estimate);
}

TEST_CASE("subcritical-only experiments reject large beta") {
    ModelParams p = ModelParams::hierarchical(20, {0.6, 0.6}, {1.0, 1.0}, 1.0);
    SweepSpec sw;
    sw.Ns = {20};
    sw.replicas = 2;
    sw.timescale = TimescaleSpec::uniform(1, 0.1, 2);
    CHECK_THROWS_AS(chaos_error(p, sw, 1), DomainError);
}

TEST_CASE("hitting time sampler") {
    const auto r = hitting_time_test(1.0, 50, 0.0, 1.0, 300, 1.0, 7, 1e-3);
    CHECK(r.ks < r.ksCritical);
    CHECK(std::abs(r.pHit - r.pTheory) < 4.0 * r.pHitStderr + 1e-3);
}
