// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "emtrace/mobility.hpp"
#include "fixtures.hpp"

using namespace emtrace;
using Catch::Approx;

namespace {

struct TownCtx {
    Scene scene;
    GridSpec grid;
    CellMask mask;
    ZoneMap zones;

    TownCtx()
        : scene(fixtures::town_scene()),
          grid(make_grid(scene, 1.25, 10.0, 1.5)),
          mask(build_mask(scene, grid)),
          zones(build_zone_map(scene, grid, mask)) {}
};

const TownCtx& town() {
    static TownCtx ctx;
    return ctx;
}

Zone zone_at(const ZoneMap& zm, int ix, int iy) {
    return zm.zone[static_cast<std::size_t>(iy) * zm.nx + ix];
}

}  // namespace

TEST_CASE("zone map separates buildings, streets and sidewalks", "[mobility]") {
    const auto& t = town();
    REQUIRE(t.zones.nx == t.grid.nx());
    REQUIRE(t.zones.ny == t.grid.ny());

    int building = 0, street = 0, ped = 0;
    for (int iy = 0; iy < t.zones.ny; ++iy) {
        for (int ix = 0; ix < t.zones.nx; ++ix) {
            const Zone z = zone_at(t.zones, ix, iy);
            if (z == Zone::building) {
                ++building;
                CHECK(t.mask.masked(ix, iy));
            } else if (z == Zone::street) {
                ++street;
            } else {
                ++ped;
            }
            if (t.mask.masked(ix, iy)) CHECK(z == Zone::building);
        }
    }
    CHECK(building > 0);
    CHECK(street > 0);
    CHECK(ped > street);

    // The east-west street band through the middle of the map.
    const Vec2 mid{-40.0, 0.0};
    const int ix = static_cast<int>((mid.x - t.zones.origin.x) / t.zones.g0);
    const int iy = static_cast<int>((mid.y - t.zones.origin.y) / t.zones.g0);
    CHECK(zone_at(t.zones, ix, iy) == Zone::street);
}

TEST_CASE("walkers stay off buildings and inside the map", "[mobility]") {
    const auto& t = town();
    MobilityParams mp;
    const auto trajs = simulate(t.zones, mp, 20, 7, 1);
    REQUIRE(trajs.size() == 20);
    for (const auto& tr : trajs) {
        REQUIRE(tr.steps.size() == static_cast<std::size_t>(mp.frames()));
        CHECK(tr.kappa >= 2.0);
        CHECK(tr.kappa <= 20.0);
        for (const auto& st : tr.steps) {
            REQUIRE(st.ix >= 0);
            REQUIRE(st.ix < t.zones.nx);
            REQUIRE(st.iy >= 0);
            REQUIRE(st.iy < t.zones.ny);
            CHECK(zone_at(t.zones, st.ix, st.iy) != Zone::building);
        }
    }
}

TEST_CASE("frames move exactly one step or not at all", "[mobility]") {
    const auto& t = town();
    MobilityParams mp;
    const double len = mp.speed() * mp.t_step;
    const auto trajs = simulate(t.zones, mp, 10, 11, 1);
    int moved = 0, still = 0;
    for (const auto& tr : trajs) {
        Vec2 prev = tr.spawn;
        for (const auto& st : tr.steps) {
            const double d = (st.pos - prev).norm();
            if (st.paused) {
                CHECK(d == Approx(0.0).margin(1e-12));
                ++still;
            } else {
                CHECK(d == Approx(len).margin(1e-9));
                ++moved;
            }
            prev = st.pos;
        }
    }
    CHECK(moved > 0);
    CHECK(still > 0);
    // Pauses happen but walking dominates.
    const double paused_frac = static_cast<double>(still) / (moved + still);
    CHECK(paused_frac > 0.02);
    CHECK(paused_frac < 0.7);
}

TEST_CASE("simulation is deterministic and worker-invariant", "[mobility]") {
    const auto& t = town();
    MobilityParams mp;
    const auto a = simulate(t.zones, mp, 6, 99, 1);
    const auto b = simulate(t.zones, mp, 6, 99, 1);
    const auto c = simulate(t.zones, mp, 6, 99, 4);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (std::size_t w = 0; w < a.size(); ++w) {
        REQUIRE(a[w].steps.size() == b[w].steps.size());
        for (std::size_t i = 0; i < a[w].steps.size(); ++i) {
            CHECK(a[w].steps[i].pos.x == b[w].steps[i].pos.x);
            CHECK(a[w].steps[i].pos.y == b[w].steps[i].pos.y);
            CHECK(a[w].steps[i].pos.x == c[w].steps[i].pos.x);
            CHECK(a[w].steps[i].pos.y == c[w].steps[i].pos.y);
        }
    }
    // A different seed gives different walks.
    const auto d = simulate(t.zones, mp, 6, 100, 1);
    bool any_diff = false;
    for (std::size_t w = 0; w < a.size() && !any_diff; ++w)
        any_diff = (a[w].spawn - d[w].spawn).norm() > 1e-12;
    CHECK(any_diff);
}

TEST_CASE("street admission gate", "[mobility]") {
    const auto& t = town();
    MobilityParams mp;
    SECTION("closed gate keeps walkers on the sidewalk") {
        mp.rho_entry = 0.0;
        const auto trajs = simulate(t.zones, mp, 15, 3, 1);
        for (const auto& tr : trajs)
            for (const auto& st : tr.steps)
                CHECK(zone_at(t.zones, st.ix, st.iy) != Zone::street);
    }
    SECTION("open gate lets them cross") {
        mp.rho_entry = 1.0;
        const auto trajs = simulate(t.zones, mp, 15, 3, 1);
        int street_frames = 0;
        for (const auto& tr : trajs)
            for (const auto& st : tr.steps)
                street_frames += zone_at(t.zones, st.ix, st.iy) == Zone::street ? 1 : 0;
        CHECK(street_frames > 0);
    }
}

TEST_CASE("trajectory cells match positions", "[mobility]") {
    const auto& t = town();
    MobilityParams mp;
    const auto trajs = simulate(t.zones, mp, 5, 21, 1);
    for (const auto& tr : trajs) {
        for (const auto& st : tr.steps) {
            const int ix = static_cast<int>(std::floor((st.pos.x - t.zones.origin.x) / t.zones.g0));
            const int iy = static_cast<int>(std::floor((st.pos.y - t.zones.origin.y) / t.zones.g0));
            CHECK(st.ix == ix);
            CHECK(st.iy == iy);
        }
    }
}

TEST_CASE("spawns are pedestrian cells spread over the map", "[mobility]") {
    const auto& t = town();
    MobilityParams mp;
    const auto trajs = simulate(t.zones, mp, 40, 5, 1);
    std::set<std::pair<int, int>> cells;
    for (const auto& tr : trajs) {
        CHECK(t.zones.at_pos(tr.spawn) == Zone::pedestrian);
        cells.insert({tr.steps[0].ix, tr.steps[0].iy});
    }
    CHECK(cells.size() > 20);  // not everyone piled into one corner
}

TEST_CASE("mobility parameters are validated", "[mobility]") {
    MobilityParams mp;
    CHECK_NOTHROW(mp.validate());
    CHECK(mp.frames() == 360);
    CHECK(mp.speed() == Approx(5.0 / 3.6));
    MobilityParams bad = mp;
    bad.t_avg = 365.5;  // not a multiple of the step
    CHECK_THROWS(bad.validate());
    bad = mp;
    bad.kappa_min = 30.0;  // above kappa_max
    CHECK_THROWS(bad.validate());
    bad = mp;
    bad.rho_entry = 1.5;
    CHECK_THROWS(bad.validate());
    bad = mp;
    bad.stop_prob = -0.1;
    CHECK_THROWS(bad.validate());
}
