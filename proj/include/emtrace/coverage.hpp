// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "delaunay.hpp"
#include "scene.hpp"

// Adaptive coverage mapping. A coarse lattice of ray-traced samples is
// refined wherever neighbouring received powers differ by more than a
// threshold, halving the spacing until it reaches the output resolution;
// the sparse samples are then interpolated over a Delaunay triangulation
// onto the full cell grid. Building-interior cells are masked throughout.

namespace emtrace {

// Sentinels for cells no path reaches. Low enough that any real signal wins,
// finite so dB-domain interpolation stays well defined.
inline constexpr double p_floor_db = -400.0;  // received power [dBW]
inline constexpr double e_floor_db = -180.0;  // field [dBuV/m]

struct GridSpec {
    Vec2 origin;    // lower-left corner of the coverage rectangle
    double lx, ly;  // extent [m]
    double g0 = 1.25;
    double g1 = 10.0;
    double z = 1.5;  // evaluation height

    int nx() const { return std::max(1, static_cast<int>(std::floor(lx / g0 + 1e-9))); }
    int ny() const { return std::max(1, static_cast<int>(std::floor(ly / g0 + 1e-9))); }
    Vec2 center(int ix, int iy) const {
        return {origin.x + (ix + 0.5) * g0, origin.y + (iy + 0.5) * g0};
    }
    Vec3 center3(int ix, int iy) const {
        const Vec2 c = center(ix, iy);
        return {c.x, c.y, z};
    }

    // Initial-lattice stride in cells; g1/g0 must be a power of two >= 2 so
    // refinement lands back on the cell grid.
    int stride1() const {
        const double ratio = g1 / g0;
        const int s = static_cast<int>(std::llround(ratio));
        if (std::abs(ratio - s) > 1e-9 || s < 2 || (s & (s - 1)) != 0)
            throw std::invalid_argument("GridSpec: g1/g0 must be a power of two >= 2");
        return s;
    }
};

inline GridSpec make_grid(const Scene& scene, double g0, double g1, double z) {
    GridSpec g;
    g.origin = scene.bounds.c2.origin;
    g.lx = scene.bounds.c2.lx;
    g.ly = scene.bounds.c2.ly;
    g.g0 = g0;
    g.g1 = g1;
    g.z = z;
    return g;
}

struct CellMask {
    int nx = 0, ny = 0;
    std::vector<std::uint8_t> building;

    bool masked(int ix, int iy) const {
        return building[static_cast<std::size_t>(iy) * nx + ix] != 0;
    }
    int unmasked_count() const {
        int n = 0;
        for (const auto b : building) n += b == 0;
        return n;
    }
};

inline CellMask build_mask(const Scene& scene, const GridSpec& g) {
    CellMask m;
    m.nx = g.nx();
    m.ny = g.ny();
    m.building.assign(static_cast<std::size_t>(m.nx) * m.ny, 0);
    for (int iy = 0; iy < m.ny; ++iy)
        for (int ix = 0; ix < m.nx; ++ix)
            if (inside_building(scene, g.center3(ix, iy)))
                m.building[static_cast<std::size_t>(iy) * m.nx + ix] = 1;
    return m;
}

struct Sample {
    double p_db;  // beamformed received power per unit EIRP [dBW]
    double e_db;  // beamformed field per unit EIRP [dBuV/m]
    int level;    // 1 = initial lattice
};

using SampleMap = std::map<std::pair<int, int>, Sample>;

// ---------------------------------------------------------------------------
// Sample evaluators.
// ---------------------------------------------------------------------------

// Ray-traced beamformed link sample; the generic algorithms below only need
// a callable (ix, iy, pos) -> Sample-values pair, which keeps them testable
// against closed-form fields.
struct LinkEvaluator {
    const Tracer* tracer;
    AntennaSpec tx_elem;        // one array element
    AntennaSpec rx;
    Vec3 p_b;                   // array reference point
    std::vector<Vec3> offsets;  // element offsets, global frame
    std::size_t m_p = 5;

    std::pair<double, double> operator()(int, int, const Vec3& pos) const {
        const auto paths = compute_multipath(*tracer, tx_elem, p_b, rx, pos, 1.0);
        const auto s = beamformed_unit_sample(tracer->carrier, tx_elem, rx, paths, offsets, m_p);
        const double p_db = s.p_unit > 0.0 ? lin_to_db(s.p_unit) : p_floor_db;
        const double e_db = s.e_unit > 0.0 ? vm_to_dbuvm(s.e_unit) : e_floor_db;
        return {std::max(p_db, p_floor_db), std::max(e_db, e_floor_db)};
    }
};

// ---------------------------------------------------------------------------
// Adaptive grid refinement.
// ---------------------------------------------------------------------------

struct AgrConfig {
    double delta_p_db = 5.0;  // neighbour power gap that triggers refinement
};

template <typename F>
SampleMap build_initial(const GridSpec& g, const CellMask& mask, F&& eval) {
    SampleMap m;
    const int s1 = g.stride1();
    const int base = s1 / 2;
    for (int iy = base; iy < g.ny(); iy += s1) {
        for (int ix = base; ix < g.nx(); ix += s1) {
            if (mask.masked(ix, iy)) continue;
            const auto [p, e] = eval(ix, iy, g.center3(ix, iy));
            m[{ix, iy}] = {p, e, 1};
        }
    }
    return m;
}

// One refinement pass at the given level: compare every sample against the
// existing neighbours one current-level stride away along the axes and
// simulate the midpoints of pairs that disagree by more than delta_p.
// Returns the number of new samples.
template <typename F>
int refine_level(SampleMap& m, const GridSpec& g, const CellMask& mask, F&& eval,
                 const AgrConfig& cfg, int level) {
    const int stride = g.stride1() >> (level - 1);
    if (stride < 2) return 0;
    static constexpr int dx[4] = {1, -1, 0, 0};
    static constexpr int dy[4] = {0, 0, 1, -1};
    std::set<std::pair<int, int>> fresh;
    for (const auto& [c, s] : m) {
        for (int d = 0; d < 4; ++d) {
            const std::pair<int, int> nb{c.first + dx[d] * stride, c.second + dy[d] * stride};
            const auto it = m.find(nb);
            if (it == m.end()) continue;
            if (std::abs(s.p_db - it->second.p_db) <= cfg.delta_p_db) continue;
            const std::pair<int, int> mid{c.first + dx[d] * stride / 2,
                                          c.second + dy[d] * stride / 2};
            if (mid.first < 0 || mid.first >= g.nx() || mid.second < 0 || mid.second >= g.ny())
                continue;
            if (mask.masked(mid.first, mid.second) || m.count(mid)) continue;
            fresh.insert(mid);
        }
    }
    for (const auto& c : fresh) {
        const auto [p, e] = eval(c.first, c.second, g.center3(c.first, c.second));
        m[c] = {p, e, level + 1};
    }
    return static_cast<int>(fresh.size());
}

template <typename F>
SampleMap adaptive_map(const GridSpec& g, const CellMask& mask, F&& eval,
                       const AgrConfig& cfg = {}) {
    SampleMap m = build_initial(g, mask, eval);
    for (int level = 1; (g.stride1() >> (level - 1)) >= 2; ++level)
        refine_level(m, g, mask, eval, cfg, level);
    return m;
}

// Dense reference lattice at the given spacing (a multiple of g0); spacing
// equal to g0 samples every unmasked cell.
template <typename F>
SampleMap uniform_map(const GridSpec& g, const CellMask& mask, F&& eval, double spacing) {
    const int stride = std::max(1, static_cast<int>(std::llround(spacing / g.g0)));
    SampleMap m;
    const int base = stride / 2;
    for (int iy = base; iy < g.ny(); iy += stride) {
        for (int ix = base; ix < g.nx(); ix += stride) {
            if (mask.masked(ix, iy)) continue;
            const auto [p, e] = eval(ix, iy, g.center3(ix, iy));
            m[{ix, iy}] = {p, e, 0};
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Rasterisation.
// ---------------------------------------------------------------------------

struct Raster {
    int nx = 0, ny = 0;
    std::vector<double> p_db, e_db;
    std::vector<std::uint8_t> mask;      // building cells, excluded from stats
    std::vector<std::uint8_t> fallback;  // nearest-sample fill (outside hull)
    int simulated = 0;                   // ray-traced sample count

    std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx + ix; }
    int unmasked_count() const {
        int n = 0;
        for (const auto b : mask) n += b == 0;
        return n;
    }
};

inline Raster rasterize(const SampleMap& m, const GridSpec& g, const CellMask& mask) {
    if (m.empty()) throw std::invalid_argument("rasterize: empty sample map");
    Raster r;
    r.nx = g.nx();
    r.ny = g.ny();
    const std::size_t n = static_cast<std::size_t>(r.nx) * r.ny;
    r.p_db.assign(n, p_floor_db);
    r.e_db.assign(n, e_floor_db);
    r.mask = mask.building;
    r.fallback.assign(n, 0);
    r.simulated = static_cast<int>(m.size());

    std::vector<IntPoint> pts;
    std::vector<double> vp, ve;
    pts.reserve(m.size());
    for (const auto& [c, s] : m) {
        pts.push_back({c.first, c.second});
        vp.push_back(s.p_db);
        ve.push_back(s.e_db);
    }
    std::optional<Delaunay> tri;
    if (pts.size() >= 3) {
        try {
            tri.emplace(pts);
        } catch (const std::invalid_argument&) {
            tri.reset();  // collinear sample set; everything falls back
        }
    }

    auto nearest = [&](int ix, int iy) -> std::size_t {
        std::size_t best = 0;
        std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const std::int64_t dx = pts[k].x - ix, dy = pts[k].y - iy;
            const std::int64_t d = dx * dx + dy * dy;
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    };

    for (int iy = 0; iy < r.ny; ++iy) {
        for (int ix = 0; ix < r.nx; ++ix) {
            if (mask.masked(ix, iy)) continue;
            const std::size_t i = r.idx(ix, iy);
            if (const auto it = m.find({ix, iy}); it != m.end()) {
                r.p_db[i] = it->second.p_db;
                r.e_db[i] = it->second.e_db;
                continue;
            }
            std::optional<double> p, e;
            if (tri) {
                p = tri->interpolate({ix, iy}, vp);
                e = tri->interpolate({ix, iy}, ve);
            }
            if (p && e) {
                r.p_db[i] = *p;
                r.e_db[i] = *e;
            } else {
                const std::size_t k = nearest(ix, iy);
                r.p_db[i] = vp[k];
                r.e_db[i] = ve[k];
                r.fallback[i] = 1;
            }
        }
    }
    return r;
}

// Signed mean, standard deviation and mean absolute value of the per-cell
// field difference (dB) over jointly unmasked cells.
struct AccuracyReport {
    double mean_e = 0.0;
    double std_e = 0.0;
    double mae_e = 0.0;
    double mean_p = 0.0;
    double std_p = 0.0;
    int cells = 0;
};

inline AccuracyReport compare_rasters(const Raster& a, const Raster& b) {
    if (a.nx != b.nx || a.ny != b.ny)
        throw std::invalid_argument("compare_rasters: dimension mismatch");
    AccuracyReport rep;
    double se = 0.0, se2 = 0.0, sae = 0.0, sp = 0.0, sp2 = 0.0;
    for (std::size_t i = 0; i < a.e_db.size(); ++i) {
        if (a.mask[i] || b.mask[i]) continue;
        const double de = a.e_db[i] - b.e_db[i];
        const double dp = a.p_db[i] - b.p_db[i];
        se += de;
        se2 += de * de;
        sae += std::abs(de);
        sp += dp;
        sp2 += dp * dp;
        rep.cells++;
    }
    if (rep.cells == 0) return rep;
    const double n = rep.cells;
    rep.mean_e = se / n;
    rep.std_e = std::sqrt(std::max(0.0, se2 / n - rep.mean_e * rep.mean_e));
    rep.mae_e = sae / n;
    rep.mean_p = sp / n;
    rep.std_p = std::sqrt(std::max(0.0, sp2 / n - rep.mean_p * rep.mean_p));
    return rep;
}

}  // namespace emtrace
