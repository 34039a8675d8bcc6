#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "trimgame/rng.hpp"
#include "trimgame/strategies.hpp"

using namespace trimgame;
using strategies::DefenderScheme;
using strategies::TriggerState;

TEST_CASE("titfortat trims soft until the quality trigger, then hard forever") {
    auto scheme = DefenderScheme::titfortat(0.95, 0.05);
    TriggerState state;

    auto r1 = strategies::titfortat_step(state, 0.99, 1.0, 0.05, scheme, 1);
    CHECK(r1.threshold.pp() == Catch::Approx(96.0));
    CHECK_FALSE(r1.state.triggered);

    auto r2 = strategies::titfortat_step(r1.state, 0.90, 1.0, 0.05, scheme, 3);
    CHECK(r2.threshold.pp() == Catch::Approx(92.0));
    CHECK(r2.state.triggered);
    CHECK(r2.state.trigger_round == 3);

    // absorbing: recovery does not untrigger
    auto r3 = strategies::titfortat_step(r2.state, 1.0, 1.0, 0.05, scheme, 4);
    CHECK(r3.threshold.pp() == Catch::Approx(92.0));
    CHECK(r3.state.triggered);
    CHECK(r3.state.trigger_round == 3);
}

TEST_CASE("titfortat threshold sequence takes at most two values") {
    auto scheme = DefenderScheme::titfortat(0.9, 0.02);
    rng::Stream stream(5);
    TriggerState state;
    bool seen_soft = false, seen_hard = false;
    for (int round = 1; round <= 200; ++round) {
        double qe = round <= 3 ? 1.0 : stream.uniform(0.8, 1.0);
        auto r = strategies::titfortat_step(state, qe, 1.0, scheme.red, scheme, round);
        if (r.threshold.pp() == Catch::Approx(91.0))
            seen_soft = true;
        else if (r.threshold.pp() == Catch::Approx(87.0))
            seen_hard = true;
        else
            FAIL("unexpected threshold");
        if (state.triggered) CHECK(r.state.triggered);  // monotone
        state = r.state;
    }
    CHECK(seen_soft);
    CHECK(seen_hard);
}

TEST_CASE("literal trigger sign switch trips on the redundancy itself") {
    auto scheme = DefenderScheme::titfortat(0.95, 0.05);
    scheme.literal_trigger_sign = true;
    // qe equal to the baseline is below baseline + red, so it trips at once
    auto r = strategies::titfortat_step(TriggerState{}, 1.0, 1.0, scheme.red, scheme, 1);
    CHECK(r.state.triggered);
}

TEST_CASE("elastic threshold interpolates between the hard and soft positions") {
    CHECK(strategies::elastic_threshold(0.0, 0.7, 0.9, 0.99) == Catch::Approx(0.9));
    CHECK(strategies::elastic_threshold(1.0, 1.0 - 1e-12, 0.9, 0.99) == Catch::Approx(0.99));
    CHECK(strategies::elastic_threshold(0.5, 0.5, 0.9, 0.99) == Catch::Approx(0.9225));
    CHECK_THROWS_AS(strategies::elastic_threshold(0.9, 1.2, 0.9, 0.99), std::domain_error);

    rng::Stream stream(3);
    for (int i = 0; i < 200; ++i) {
        double qe = stream.uniform();
        double k = stream.uniform(0.0, 0.999);
        double v = strategies::elastic_threshold(qe, k, 0.9, 0.99);
        CHECK(v >= 0.9);
        CHECK(v <= 0.99);
    }
}

TEST_CASE("elastic position updates") {
    CHECK(strategies::elastic_defender_update(95, 0.5, 96) == Catch::Approx(95.0));
    CHECK(strategies::elastic_defender_update(95, 0.0, 42) == Catch::Approx(95.0));
    CHECK(strategies::elastic_defender_update(95, 0.5, 91) == Catch::Approx(92.5));

    CHECK(strategies::elastic_attacker_update(95, 0.7, 95) == Catch::Approx(92.0));
    CHECK(strategies::elastic_attacker_update(95, 0.5, 92) == Catch::Approx(90.5));
    CHECK(strategies::elastic_attacker_update(95, 0.0, 10) == Catch::Approx(92.0));
}

TEST_CASE("elastic fixed point matches the iterated recurrences") {
    // oracle: iterate both updates 200 steps from the published initial
    // positions and compare against the closed form
    for (double k : {0.0, 0.1, 0.5, 0.9}) {
        double t = 95.0 - 3.0, a = 95.0 + 1.0;
        for (int i = 0; i < 2000; ++i) {
            double t_next = strategies::elastic_defender_update(95.0, k, a);
            double a_next = strategies::elastic_attacker_update(95.0, k, t);
            t = t_next;
            a = a_next;
        }
        auto fp = strategies::elastic_fixed_point(95.0, k);
        CHECK(std::fabs(fp.defender_pp - t) < 1e-9);
        CHECK(std::fabs(fp.attacker_pp - a) < 1e-9);
    }
    auto fp0 = strategies::elastic_fixed_point(95.0, 0.0);
    CHECK(fp0.defender_pp == Catch::Approx(95.0));
    CHECK(fp0.attacker_pp == Catch::Approx(92.0));
    auto fp5 = strategies::elastic_fixed_point(95.0, 0.5);
    CHECK(fp5.defender_pp == Catch::Approx(92.0 + 1.0 / 3.0).epsilon(1e-9));
    CHECK(fp5.attacker_pp == Catch::Approx(90.0 + 2.0 / 3.0).epsilon(1e-9));
    auto fp1 = strategies::elastic_fixed_point(95.0, 0.1);
    CHECK(fp1.defender_pp == Catch::Approx(94.59596).epsilon(1e-6));
    CHECK(fp1.attacker_pp == Catch::Approx(91.959596).epsilon(1e-6));
    CHECK_THROWS_AS(strategies::elastic_fixed_point(95.0, 1.0), std::domain_error);
}

TEST_CASE("composing both elastic updates twice contracts by exactly k squared") {
    for (double k : {0.1, 0.3, 0.5, 0.8}) {
        auto fp = strategies::elastic_fixed_point(95.0, k);
        double t = 40.0, a = 120.0;  // arbitrary start, far from the fixed point
        double dev_t = t - fp.defender_pp;
        for (int pair = 0; pair < 20; ++pair) {
            double t1 = strategies::elastic_defender_update(95.0, k, a);
            double a1 = strategies::elastic_attacker_update(95.0, k, t);
            double t2 = strategies::elastic_defender_update(95.0, k, a1);
            double a2 = strategies::elastic_attacker_update(95.0, k, t1);
            t = t2;
            a = a2;
            double next_dev = t - fp.defender_pp;
            // the ratio is exact in real arithmetic; stop once the deviation
            // is small enough that double rounding dominates it
            if (std::fabs(dev_t) < 1e-4) break;
            CHECK(std::fabs(next_dev / dev_t - k * k) < 1e-9);
            dev_t = next_dev;
        }
    }
}

TEST_CASE("mixed evasive injection frequencies follow the mix") {
    rng::Stream stream(123);
    CHECK(strategies::mixed_evasive_injection(1.0, stream).pp() == Catch::Approx(99.0));
    CHECK(strategies::mixed_evasive_injection(0.0, stream).pp() == Catch::Approx(90.0));

    int hi = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        if (strategies::mixed_evasive_injection(0.3, stream).pp() > 95.0) ++hi;
    CHECK(std::fabs(hi / static_cast<double>(draws) - 0.30) < 0.01);
}

TEST_CASE("mixed evasive injection is deterministic per seed") {
    rng::Stream a(77), b(77);
    for (int i = 0; i < 100; ++i)
        CHECK(strategies::mixed_evasive_injection(0.5, a).q ==
              strategies::mixed_evasive_injection(0.5, b).q);
}
