#include <doctest.h>

#include <cmath>

#include "hierspin/model.hpp"
#include "hierspin/rng.hpp"

using namespace hierspin;

TEST_CASE("philox known answers") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are deterministic and distinct") {
    Stream a(7, 3, 2), b(7, 3, 2), c(7, 4, 2), d(7, 3, 1);
    for (int i = 0; i < 100; ++i) {
        const auto va = a.bits();
        CHECK(va == b.bits());
        CHECK(va != c.bits());
        CHECK(va != d.bits());
    }
    Stream u(1, 0);
    double s = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double x = u.uniform();
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
        s += x;
    }
    CHECK(std::abs(s / 20000 - 0.5) < 0.01);
}

TEST_CASE("hierarchy indexing") {
    HierarchyShape h{2, 3};
    CHECK(h.totalSites() == 9);
    CHECK(h.blocksAt(1) == 3);
    CHECK(h.blockVolume(2) == 9);
    CHECK(h.flatten(h.tuple(7)) == 7);
    CHECK(h.distance(0, 0) == 0);
    CHECK(h.distance(0, 1) == 1);
    CHECK(h.distance(0, 4) == 2);
    CHECK_THROWS_AS(HierarchyShape({0, 3}).validate(), ConfigError);
}

TEST_CASE("parameter validation") {
    ModelParams p = ModelParams::hierarchical(4, {0.5, 0.2}, {1.0, 1.0}, 1.0);
    CHECK_NOTHROW(p.validate());
    p.zeroTemperature = true;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    ModelParams q = ModelParams::meanField(4, 0.5, 1.0);
    q.spinUpProb = 1.5;
    CHECK_THROWS_AS(q.validate(), ConfigError);
}

TEST_CASE("flip rates") {
    ModelParams p = ModelParams::meanField(4, 0.5, 1.0);
    CHECK(flip_rate(1, 0.0, p) == doctest::Approx(1.0));
    CHECK(flip_rate(-1, 0.5, p) == doctest::Approx(1.0 + std::tanh(0.5)));
    CHECK(flip_rate(-1, 0.5, p) == doctest::Approx(1.4621).epsilon(1e-4));
    CHECK(flip_rate(1, 3.0, true) == 0.0);
    CHECK(flip_rate(-1, 3.0, true) == 2.0);
    CHECK(flip_rate(1, 0.0, true) == 1.0);
}

TEST_CASE("block observables") {
    SystemState s;
    s.spins = {1, 1, -1, -1};
    s.fields = {0.0, 0.0, 0.0, 0.0};
    auto o = block_observables(s, {1, 4});
    CHECK(o.topM() == 0.0);

    SystemState t;
    t.spins = {1, 1, 1, -1};
    t.fields = {0.2, 0.0, 0.1, 0.1};
    auto h = block_observables(t, {2, 2});
    CHECK(h.magnetization(1, 0) == 1.0);
    CHECK(h.magnetization(1, 1) == 0.0);
    CHECK(h.topM() == 0.5);
    CHECK(h.fieldAverage(1, 0) == doctest::Approx(0.1));
    CHECK(h.topX() == doctest::Approx(0.1));
}

TEST_CASE("local flip argument") {
    SystemState zero;
    zero.spins = {1, -1, 1, -1};
    zero.fields = {0.0, 0.0, 0.0, 0.0};
    CHECK(local_flip_argument(zero, ModelParams::meanField(4, 0.5, 1.0), 0) == doctest::Approx(0.0));

    // block 0: m = 1, x = 0.3; top M = 0.5, X = 0.15
    SystemState s;
    s.spins = {1, 1, 1, -1};
    s.fields = {0.3, 0.3, 0.0, 0.0};
    ModelParams p = ModelParams::hierarchical(2, {1.0, 1.0}, {1.0, 1.0}, 1.0);
    CHECK(local_flip_argument(s, p, 0) == doctest::Approx(1.3 + 0.65));
    ModelParams q = ModelParams::hierarchical(2, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    SystemState ones;
    ones.spins = {1, 1, 1, 1};
    ones.fields = {1.0, 1.0, 1.0, 1.0};
    CHECK(local_flip_argument(ones, q, 3) == doctest::Approx(1.2));
    CHECK_THROWS(local_flip_argument(ones, q, 4));
}
