// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "emtrace/coverage.hpp"
#include "fixtures.hpp"

using namespace emtrace;
using Catch::Approx;

namespace {

GridSpec square_grid() {
    GridSpec g;
    g.origin = {-20.0, -20.0};
    g.lx = 40.0;
    g.ly = 40.0;
    g.g0 = 1.25;
    g.g1 = 10.0;
    g.z = 1.5;
    return g;
}

CellMask open_mask(const GridSpec& g) {
    CellMask m;
    m.nx = g.nx();
    m.ny = g.ny();
    m.building.assign(static_cast<std::size_t>(m.nx) * m.ny, 0);
    return m;
}

}  // namespace

TEST_CASE("initial lattice sits mid-block at the coarse pitch", "[coverage]") {
    const GridSpec g = square_grid();
    REQUIRE(g.stride1() == 8);
    const CellMask mask = open_mask(g);
    int evals = 0;
    const auto m = build_initial(g, mask, [&](int, int, const Vec3&) {
        ++evals;
        return std::pair<double, double>{-50.0, 20.0};
    });
    CHECK(evals == 16);  // 32 / 8 = 4 rows of 4
    REQUIRE(m.size() == 16);
    for (const auto& [c, s] : m) {
        CHECK(((c.first - 4) % 8) == 0);
        CHECK(((c.second - 4) % 8) == 0);
        CHECK(s.level == 1);
    }
}

TEST_CASE("smooth fields never trigger refinement", "[coverage]") {
    const GridSpec g = square_grid();
    const CellMask mask = open_mask(g);
    // 0.3 dB/m slope: 3 dB across one 10 m stride, below the 5 dB trigger.
    const auto eval = [](int, int, const Vec3& p) {
        return std::pair<double, double>{0.3 * p.x, 0.3 * p.x + 65.0};
    };
    const auto initial = build_initial(g, mask, eval);
    const auto refined = adaptive_map(g, mask, eval, {});
    CHECK(refined.size() == initial.size());
}

TEST_CASE("sharp steps refine down to the fine pitch", "[coverage]") {
    const GridSpec g = square_grid();
    const CellMask mask = open_mask(g);
    // 40 dB wall at x = 0 forces midpoint subdivision wherever a pair of
    // neighbours straddles the step.
    const auto eval = [](int, int, const Vec3& p) {
        const double v = p.x < 0.0 ? -20.0 : -60.0;
        return std::pair<double, double>{v, v + 100.0};
    };
    const auto m = adaptive_map(g, mask, eval, {});
    const auto initial = build_initial(g, mask, eval);
    CHECK(m.size() > initial.size());
    int deepest = 0;
    for (const auto& [c, s] : m) deepest = std::max(deepest, s.level);
    // Levels 1..4 exist for strides 8, 4, 2, 1.
    CHECK(deepest == 4);
    // Refinement stays local to the step: far from it the lattice is coarse.
    for (const auto& [c, s] : m) {
        const double x = g.center(c.first, c.second).x;
        if (std::abs(x) > 12.0) CHECK(s.level == 1);
    }
}

TEST_CASE("masked cells are never sampled", "[coverage]") {
    const GridSpec g = square_grid();
    CellMask mask = open_mask(g);
    for (int iy = 0; iy < g.ny(); ++iy)
        for (int ix = 12; ix < 20; ++ix)
            mask.building[static_cast<std::size_t>(iy) * g.nx() + ix] = 1;
    const auto m = adaptive_map(g, mask, [](int, int, const Vec3& p) {
        const double v = p.x < 0.0 ? -20.0 : -60.0;
        return std::pair<double, double>{v, v + 100.0};
    }, {});
    for (const auto& [c, s] : m) {
        CHECK((c.first < 12 || c.first >= 20));
    }
}

TEST_CASE("piecewise-linear interpolation reproduces affine fields", "[coverage]") {
    const GridSpec g = square_grid();
    const CellMask mask = open_mask(g);
    const auto plane = [](const Vec3& p) { return -40.0 + 0.8 * p.x - 0.45 * p.y; };
    const auto eval = [&](int, int, const Vec3& p) {
        return std::pair<double, double>{plane(p), plane(p) + 90.0};
    };
    const auto m = build_initial(g, mask, eval);
    const Raster r = rasterize(m, g, mask);
    REQUIRE(r.nx == 32);
    int interior = 0;
    for (int iy = 0; iy < g.ny(); ++iy) {
        for (int ix = 0; ix < g.nx(); ++ix) {
            const std::size_t i = r.idx(ix, iy);
            const double want = plane(g.center3(ix, iy));
            if (!r.fallback[i]) {
                ++interior;
                CHECK(r.p_db[i] == Approx(want).margin(1e-9));
                CHECK(r.e_db[i] == Approx(want + 90.0).margin(1e-9));
            } else {
                // Outside the sample hull the nearest sample fills in.
                const double err = std::abs(r.p_db[i] - want);
                CHECK(err <= 0.8 * 10.0 + 0.45 * 10.0);
            }
        }
    }
    // The hull of the coarse lattice covers the block [4, 28]^2.
    CHECK(interior == 25 * 25);
    CHECK(r.simulated == 16);
}

TEST_CASE("floor values survive rasterisation", "[coverage]") {
    const GridSpec g = square_grid();
    const CellMask mask = open_mask(g);
    const auto m = build_initial(g, mask, [](int, int, const Vec3&) {
        return std::pair<double, double>{p_floor_db, e_floor_db};
    });
    const Raster r = rasterize(m, g, mask);
    for (std::size_t i = 0; i < r.p_db.size(); ++i) {
        CHECK(r.p_db[i] == Approx(p_floor_db));
        CHECK(r.e_db[i] == Approx(e_floor_db));
    }
}

TEST_CASE("uniform map pitch", "[coverage]") {
    const GridSpec g = square_grid();
    const CellMask mask = open_mask(g);
    const auto m = uniform_map(g, mask, [](int, int, const Vec3&) {
        return std::pair<double, double>{-30.0, 80.0};
    }, 3.75);
    // stride 3 over 32 cells starting at 1: 11 per axis.
    CHECK(m.size() == 121);
}

TEST_CASE("raster comparison statistics", "[coverage]") {
    const GridSpec g = square_grid();
    const CellMask mask = open_mask(g);
    const auto eval = [](int, int, const Vec3& p) {
        return std::pair<double, double>{-30.0 + 0.2 * p.y, 75.0 + 0.2 * p.y};
    };
    const Raster a = rasterize(build_initial(g, mask, eval), g, mask);
    const auto self = compare_rasters(a, a);
    CHECK(self.cells == 32 * 32);
    CHECK(self.mean_e == Approx(0.0).margin(1e-12));
    CHECK(self.std_e == Approx(0.0).margin(1e-12));
    CHECK(self.mae_e == Approx(0.0).margin(1e-12));

    Raster b = a;
    for (auto& v : b.e_db) v += 2.0;
    for (auto& v : b.p_db) v -= 1.0;
    const auto rep = compare_rasters(a, b);
    CHECK(rep.mean_e == Approx(-2.0));
    CHECK(rep.std_e == Approx(0.0).margin(1e-12));
    CHECK(rep.mae_e == Approx(2.0));
    CHECK(rep.mean_p == Approx(1.0));

    Raster c = a;
    c.nx = 16;
    CHECK_THROWS(compare_rasters(a, c));
}

TEST_CASE("rasterize rejects an empty sample map", "[coverage]") {
    const GridSpec g = square_grid();
    CHECK_THROWS(rasterize({}, g, open_mask(g)));
}

TEST_CASE("adaptive refinement on the screen scene stays sparse", "[coverage]") {
    // End-to-end sanity on real geometry: the refined sample count remains a
    // small fraction of the full lattice while following the shadow edges.
    const Scene s = fixtures::screen_scene();
    const CarrierSpec carrier;
    LaunchConfig lc;
    lc.m_dim = 300000;
    lc.workers = 0;
    const Tracer tracer(s, carrier, lc);
    const GridSpec g = make_grid(s, 1.25, 10.0, 1.5);
    const CellMask mask = build_mask(s, g);
    const LinkEvaluator eval{&tracer, isotropic_antenna(), isotropic_antenna(),
                             {0.0, 30.0, 10.0}, {{0.0, 0.0, 0.0}}, 5};
    const auto m = adaptive_map(g, mask, eval, {});
    const Raster r = rasterize(m, g, mask);
    const double frac = static_cast<double>(m.size()) / r.unmasked_count();
    INFO("simulated fraction " << frac);
    CHECK(frac < 0.6);
    CHECK(m.size() >= 40);
}
