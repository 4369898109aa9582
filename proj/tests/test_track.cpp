#include <catch2/catch.hpp>

#include <cmath>

#include "srus/rng.hpp"
#include "srus/track.hpp"

using namespace srus;

namespace {
Localization at(double y, double x, int frame = 0) {
    Localization l;
    l.y = y;
    l.x = x;
    l.frame_index = frame;
    return l;
}
} // namespace

TEST_CASE("velocity from a single displaced peak", "[track]") {
    // 10 um along x over 2 ms -> 5 mm/s
    auto v = nn_pair_velocities({at(0, 0, 3)}, {at(0, 10e-6, 4)}, 2e-3, 60e-6);
    REQUIRE(v.size() == 1);
    CHECK(v[0].vx == Approx(5e-3));
    CHECK(v[0].vy == 0.0);
    CHECK(v[0].frame_index == 3);
    CHECK(v[0].x == Approx(5e-6));
    CHECK(v[0].pair_distance == Approx(10e-6));
    CHECK(v[0].speed() == Approx(5e-3));
}

TEST_CASE("empty inputs produce empty output", "[track]") {
    CHECK(nn_pair_velocities({}, {at(0, 0)}, 2e-3, 60e-6).empty());
    CHECK(nn_pair_velocities({at(0, 0)}, {}, 2e-3, 60e-6).empty());
}

TEST_CASE("pairing respects the displacement gate", "[track]") {
    auto v = nn_pair_velocities({at(0, 0)}, {at(0, 100e-6)}, 2e-3, 60e-6);
    CHECK(v.empty());
}

TEST_CASE("greedy matching properties", "[track]") {
    Rng rng(17);
    std::vector<Localization> a, b;
    for (int k = 0; k < 12; ++k) {
        a.push_back(at(rng.uniform(0, 1e-3), rng.uniform(0, 1e-3)));
        b.push_back(at(rng.uniform(0, 1e-3), rng.uniform(0, 1e-3)));
    }
    const double max_disp = 120e-6;
    auto v = nn_pair_velocities(a, b, 2e-3, max_disp);

    SECTION("every pair distance is within the gate; no endpoint reused") {
        for (const auto& w : v) CHECK(w.pair_distance <= max_disp);
        // reconstruct endpoints from midpoint and velocity, count uniqueness
        std::vector<std::pair<double, double>> starts;
        for (const auto& w : v)
            starts.emplace_back(w.y - 0.5 * w.vy * 2e-3, w.x - 0.5 * w.vx * 2e-3);
        for (size_t i = 0; i < starts.size(); ++i)
            for (size_t j = i + 1; j < starts.size(); ++j)
                CHECK((starts[i] != starts[j]));
        CHECK(v.size() <= a.size());
    }
    SECTION("swapping the lists negates the velocities") {
        auto r = nn_pair_velocities(b, a, 2e-3, max_disp);
        REQUIRE(r.size() == v.size());
        // same pairs surface in the same (distance-sorted) order
        for (size_t k = 0; k < v.size(); ++k) {
            CHECK(r[k].pair_distance == Approx(v[k].pair_distance));
            CHECK(r[k].vy == Approx(-v[k].vy));
            CHECK(r[k].vx == Approx(-v[k].vx));
            CHECK(r[k].y == Approx(v[k].y));
            CHECK(r[k].x == Approx(v[k].x));
        }
    }
}

TEST_CASE("track parameter validation", "[track]") {
    CHECK_THROWS_AS(nn_pair_velocities({}, {}, 0.0, 60e-6), ConfigError);
    CHECK_THROWS_AS(nn_pair_velocities({}, {}, 2e-3, 0.0), ConfigError);
}
