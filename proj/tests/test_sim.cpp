#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hierspin/fields.hpp"
#include "hierspin/harness.hpp"
#include "hierspin/sim.hpp"

using namespace hierspin;

TEST_CASE("initial state sampling") {
    ModelParams p = ModelParams::hierarchical(10, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    p.spinUpProb = 1.0;
    p.fieldInitStd = 0.0;
    p.fieldInitMean = 0.3;
    const SystemState s = sample_initial_state(p, {1, 0});
    for (auto v : s.spins) REQUIRE(v == 1);
    for (double x : s.fields) REQUIRE(x == 0.3);

    ModelParams q = ModelParams::hierarchical(100, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    int large = 0;
    for (std::uint64_t r = 0; r < 50; ++r) {
        const auto o = block_observables(sample_initial_state(q, {5, r}), q.shape);
        if (std::abs(o.topM()) >= 0.05) ++large;
    }
    CHECK(large == 0);
}

TEST_CASE("fields stay constant without noise") {
    ModelParams p = ModelParams::hierarchical(4, {0.0, 0.0}, {1.0, 2.0}, 0.0);
    std::vector<double> f0(16, 0.7);
    const auto out = simulate_diffusions_exact(p, f0, {0.5, 1.0, 3.0}, {1, 0});
    for (const auto& row : out)
        for (double x : row) CHECK(x == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("pinned top average hits the pin") {
    ModelParams p = ModelParams::hierarchical(5, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    std::vector<double> f0(25, 0.0);
    FieldProcess fp(p, f0, 0.0, Stream(3, 0, kTagFields));
    fp.pinTop(40.0, 1.25);
    fp.top(10.0);
    CHECK(fp.top(40.0) == doctest::Approx(1.25).epsilon(1e-12));
    const auto v = fp.siteFields(40.0);
    double mean = 0.0;
    for (double x : v) mean += x / v.size();
    CHECK(mean == doctest::Approx(1.25).epsilon(1e-9));
}

TEST_CASE("exact field transition against Euler reference") {
    ModelParams p = ModelParams::hierarchical(3, {0.0, 0.0}, {1.0, 1.0}, 1.0);
    std::vector<double> f0(9, 0.0);
    std::vector<double> ex, eu;
    for (std::uint64_t r = 0; r < 400; ++r) {
        ex.push_back(simulate_diffusions_exact(p, f0, {1.0}, {11, r})[0][0]);
        eu.push_back(simulate_diffusions_euler(p, f0, {1.0}, {12, r}, 1e-3)[0][0]);
    }
    const Summary a = summarize(ex), b = summarize(eu);
    CHECK(std::abs(a.mean - b.mean) < 4.0 * std::hypot(a.stderror, b.stderror));
    CHECK(ks_two_sample(ex, eu) < 1.63 * std::sqrt(2.0 / 400));
}

TEST_CASE("simulation is deterministic") {
    ModelParams p = ModelParams::hierarchical(6, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    const auto ts = TimescaleSpec::uniform(1, 0.5, 5);
    const SystemState s0 = sample_initial_state(p, {9, 2});
    std::ostringstream a, b;
    write_path_csv(a, simulate_system(p, s0, ts, {9, 2}));
    write_path_csv(b, simulate_system(p, s0, ts, {9, 2}));
    CHECK(a.str() == b.str());
    std::ostringstream c;
    write_path_csv(c, simulate_system(p, s0, ts, {9, 3}));
    CHECK(a.str() != c.str());
}

TEST_CASE("incremental observables match recomputation") {
    ModelParams p = ModelParams::hierarchical(5, {0.4, 0.3}, {1.0, 1.0}, 1.0);
    const SystemState s0 = sample_initial_state(p, {4, 0});
    Engine e(p, s0, {4, 0});
    for (double t : {1.0, 5.0, 20.0}) {
        e.runUntil(t);
        const SystemState snap = e.snapshot();
        const BlockObservables inc = e.observables();
        const BlockObservables ref = block_observables(snap, p.shape);
        for (int d = 1; d <= p.k(); ++d)
            for (std::size_t b = 0; b < inc.m[d - 1].size(); ++b) {
                CHECK(inc.m[d - 1][b] == doctest::Approx(ref.m[d - 1][b]));
                CHECK(inc.x[d - 1][b] == doctest::Approx(ref.x[d - 1][b]).epsilon(1e-9));
            }
        CHECK(e.fieldArgument(3) == doctest::Approx(local_flip_argument(snap, p, 3)).epsilon(1e-9));
    }
    CHECK(e.accepted() <= e.candidates());
}

TEST_CASE("zero temperature never flips aligned spins") {
    ModelParams p;
    p.shape = {1, 50};
    p.alpha = {1.0};
    p.sigma = 0.0;
    p.zeroTemperature = true;
    p.spinUpProb = 1.0;
    p.fieldInitMean = 0.5;
    p.fieldInitStd = 0.0;
    const auto path = simulate_system(p, sample_initial_state(p, {1, 0}), TimescaleSpec::uniform(0, 5.0, 3), {1, 0});
    for (const auto& o : path.observables) CHECK(o.topM() == 1.0);
}

TEST_CASE("decoupled spins follow the telegraph mean") {
    ModelParams p = ModelParams::meanField(400, 0.0, 1.0);
    p.spinUpProb = 0.9;
    std::vector<double> v;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto s0 = sample_initial_state(p, {21, r});
        const auto path = simulate_system(p, s0, TimescaleSpec::uniform(0, 1.0, 2), {21, r});
        v.push_back(path.observables.back().topM() - path.observables.front().topM() * std::exp(-2.0));
    }
    const Summary s = summarize(v);
    CHECK(std::abs(s.mean) < 4.0 * s.stderror + 1e-12);
}

TEST_CASE("timescale validation") {
    TimescaleSpec ts;
    ts.horizon = 1.0;
    ts.outputGrid = {0.0, 0.5, 0.4};
    CHECK_THROWS(ts.validate());
    CHECK(TimescaleSpec::uniform(2, 1.0, 3).factor(10) == doctest::Approx(100.0));
}
