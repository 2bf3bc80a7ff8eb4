// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coverage.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "scene.hpp"

// Correlated-random-walk pedestrian mobility on the coverage grid. Walkers
// advance at a fixed speed with von Mises heading increments, pause at random
// for log-normal durations, slide along building facades, and cross streets
// in a straight line once admitted. Zones live on the same lattice as the
// coverage rasters, so a trajectory sample maps straight to a raster cell.
//
// Zone checks are endpoint based; a single step (about 1.4 m at walking
// speed) is assumed smaller than any building or street feature, which the
// bundled scenes guarantee.

namespace emtrace {

enum class Zone : std::uint8_t { pedestrian = 0, street = 1, building = 2 };

struct ZoneMap {
    Vec2 origin;
    double g0 = 1.25;
    int nx = 0, ny = 0;
    std::vector<Zone> zone;  // row-major, iy * nx + ix

    // Out-of-bounds reads as building so the walk can never leave the grid.
    Zone at(int ix, int iy) const {
        if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return Zone::building;
        return zone[static_cast<std::size_t>(iy) * nx + ix];
    }
    std::pair<int, int> cell(const Vec2& p) const {
        return {static_cast<int>(std::floor((p.x - origin.x) / g0)),
                static_cast<int>(std::floor((p.y - origin.y) / g0))};
    }
    Zone at_pos(const Vec2& p) const {
        const auto [ix, iy] = cell(p);
        return at(ix, iy);
    }
    Vec2 center(int ix, int iy) const {
        return {origin.x + (ix + 0.5) * g0, origin.y + (iy + 0.5) * g0};
    }

    std::vector<int> pedestrian_cells() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < zone.size(); ++i)
            if (zone[i] == Zone::pedestrian) out.push_back(static_cast<int>(i));
        return out;
    }
};

// Building cells come from the mesh mask, street cells from the scene's
// street polygons (cell-center containment); everything else is pedestrian.
inline ZoneMap build_zone_map(const Scene& scene, const GridSpec& g, const CellMask& mask) {
    ZoneMap zm;
    zm.origin = g.origin;
    zm.g0 = g.g0;
    zm.nx = g.nx();
    zm.ny = g.ny();
    zm.zone.assign(static_cast<std::size_t>(zm.nx) * zm.ny, Zone::pedestrian);
    for (int iy = 0; iy < zm.ny; ++iy) {
        for (int ix = 0; ix < zm.nx; ++ix) {
            auto& z = zm.zone[static_cast<std::size_t>(iy) * zm.nx + ix];
            if (mask.masked(ix, iy)) {
                z = Zone::building;
                continue;
            }
            const Vec2 c = g.center(ix, iy);
            for (const auto& s : scene.streets) {
                if (contains(s, c)) {
                    z = Zone::street;
                    break;
                }
            }
        }
    }
    return zm;
}

struct MobilityParams {
    double speed_kmh = 5.0;
    double t_step = 1.0;        // [s]
    double t_avg = 360.0;       // averaging interval [s]
    double kappa_min = 2.0;     // per-walker concentration, log-uniform
    double kappa_max = 20.0;
    double stop_prob = 0.02;    // per moving frame
    double pause_median = 10.0; // [s]
    double pause_sigma = 0.8;   // log-normal shape (natural log)
    double rho_entry = 0.1;     // street admission probability

    double speed() const { return speed_kmh / 3.6; }
    int frames() const {
        const double ratio = t_avg / t_step;
        const int t = static_cast<int>(std::llround(ratio));
        if (std::abs(ratio - t) > 1e-9 || t < 1)
            throw std::invalid_argument("MobilityParams: t_avg must be a multiple of t_step");
        return t;
    }
    void validate() const {
        if (!(speed_kmh > 0.0)) throw std::invalid_argument("MobilityParams: speed <= 0");
        if (!(t_step > 0.0)) throw std::invalid_argument("MobilityParams: t_step <= 0");
        frames();
        if (!(kappa_min > 0.0) || kappa_max < kappa_min)
            throw std::invalid_argument("MobilityParams: bad kappa range");
        if (stop_prob < 0.0 || stop_prob > 1.0)
            throw std::invalid_argument("MobilityParams: stop_prob outside [0, 1]");
        if (!(pause_median > 0.0) || pause_sigma < 0.0)
            throw std::invalid_argument("MobilityParams: bad pause distribution");
        if (rho_entry < 0.0 || rho_entry > 1.0)
            throw std::invalid_argument("MobilityParams: rho_entry outside [0, 1]");
    }
};

// Heading increment of one moving frame.
inline double step_heading(double heading, double kappa, Rng& rng) {
    return wrap_pi(heading + rng.von_mises(0.0, kappa));
}

struct TrajStep {
    Vec2 pos;
    bool paused;  // zero displacement this frame (pause, curb wait, or dead end)
    int ix, iy;   // mapped raster cell
};

struct Trajectory {
    Vec2 spawn;
    double kappa;
    std::vector<TrajStep> steps;  // length frames()
};

namespace detail {

inline constexpr std::uint64_t mobility_stream = 0x77616c6bULL;  // walker streams

// Reflect an axis-aligned heading bounce: flip the component along whichever
// axis probe is blocked; a corner (or a diagonal dead end) reverses outright.
inline double reflect_heading(const ZoneMap& zm, const Vec2& p, double theta, double len) {
    const Vec2 d{std::cos(theta), std::sin(theta)};
    const bool x_open =
        zm.at_pos({p.x + (d.x >= 0.0 ? len : -len), p.y}) == Zone::pedestrian;
    const bool y_open =
        zm.at_pos({p.x, p.y + (d.y >= 0.0 ? len : -len)}) == Zone::pedestrian;
    if (!x_open && y_open) return wrap_pi(pi - theta);
    if (x_open && !y_open) return wrap_pi(-theta);
    return wrap_pi(theta + pi);
}

struct Walker {
    Vec2 pos;
    double heading;
    double kappa;
    int pause_left = 0;
    bool in_street = false;
};

// One frame. Returns true when the walker moved (displacement exactly one
// step length), false for a zero-displacement frame. Draw order per frame is
// fixed: stop event, pause duration, heading increment, street admission.
inline bool advance(const ZoneMap& zm, const MobilityParams& mp, Walker& w, Rng& rng) {
    if (w.pause_left > 0) {
        --w.pause_left;
        return false;
    }
    if (!w.in_street) {
        if (mp.stop_prob > 0.0 && rng.uniform() < mp.stop_prob) {
            const double dur = rng.lognormal(std::log(mp.pause_median), mp.pause_sigma);
            w.pause_left =
                static_cast<int>(std::max<long long>(1, std::llround(dur / mp.t_step))) - 1;
            return false;
        }
        w.heading = step_heading(w.heading, w.kappa, rng);
    }
    const double len = mp.speed() * mp.t_step;
    const Vec2 d{std::cos(w.heading), std::sin(w.heading)};
    const Vec2 p1 = w.pos + d * len;
    const Zone z1 = zm.at_pos(p1);

    if (z1 == Zone::pedestrian) {
        w.pos = p1;
        w.in_street = false;
        return true;
    }
    if (z1 == Zone::street) {
        if (w.in_street) {  // mid-crossing, keep the frozen heading
            w.pos = p1;
            return true;
        }
        if (rng.uniform() < mp.rho_entry) {
            w.pos = p1;
            w.in_street = true;
            return true;
        }
        // Refused at the curb: bounce off the boundary and retry once.
        w.heading = reflect_heading(zm, w.pos, w.heading, len);
        const Vec2 d2{std::cos(w.heading), std::sin(w.heading)};
        const Vec2 p2 = w.pos + d2 * len;
        if (zm.at_pos(p2) == Zone::pedestrian) {
            w.pos = p2;
            return true;
        }
        return false;
    }

    // Building (or grid edge) ahead: window shopping. Slide the full step
    // along the facade, trying the axis closest to the intended heading
    // first. Slides never enter a street, so the admission gate stays the
    // only way in; mid-crossing slides may stay on street cells.
    Vec2 cand[2] = {{d.x >= 0.0 ? len : -len, 0.0}, {0.0, d.y >= 0.0 ? len : -len}};
    if (std::abs(d.y) > std::abs(d.x)) std::swap(cand[0], cand[1]);
    for (const auto& u : cand) {
        const Vec2 q = w.pos + u;
        const Zone zq = zm.at_pos(q);
        if (zq == Zone::pedestrian || (zq == Zone::street && w.in_street)) {
            w.pos = q;
            if (zq == Zone::pedestrian) w.in_street = false;
            return true;
        }
    }
    if (w.in_street) w.heading = wrap_pi(w.heading + pi);  // dead end, walk back
    return false;
}

inline Trajectory walk_one(const ZoneMap& zm, const MobilityParams& mp,
                           const std::vector<int>& ped_cells, std::uint64_t seed, int ue) {
    Rng rng = Rng::substream(seed, {mobility_stream, static_cast<std::uint64_t>(ue)});
    Walker w;
    const int c = ped_cells[static_cast<std::size_t>(rng.uniform_int(ped_cells.size()))];
    const Vec2 center = zm.center(c % zm.nx, c / zm.nx);
    w.pos = {center.x + (rng.uniform() - 0.5) * zm.g0, center.y + (rng.uniform() - 0.5) * zm.g0};
    w.heading = rng.uniform(-pi, pi);
    w.kappa = std::exp(rng.uniform(std::log(mp.kappa_min), std::log(mp.kappa_max)));

    Trajectory traj;
    traj.spawn = w.pos;
    traj.kappa = w.kappa;
    const int t_total = mp.frames();
    traj.steps.reserve(static_cast<std::size_t>(t_total));
    for (int t = 0; t < t_total; ++t) {
        const bool moved = advance(zm, mp, w, rng);
        const auto [ix, iy] = zm.cell(w.pos);
        traj.steps.push_back({w.pos, !moved, ix, iy});
    }
    return traj;
}

}  // namespace detail

// Independent walkers, one deterministic substream per (seed, walker index).
inline std::vector<Trajectory> simulate(const ZoneMap& zm, const MobilityParams& mp, int n_ue,
                                        std::uint64_t seed, int workers = 1) {
    mp.validate();
    if (n_ue < 1) throw std::invalid_argument("simulate: n_ue < 1");
    const auto ped = zm.pedestrian_cells();
    if (ped.empty()) throw std::invalid_argument("simulate: no pedestrian cells");
    std::vector<Trajectory> out(static_cast<std::size_t>(n_ue));
    parallel_for(static_cast<std::size_t>(n_ue), workers, [&](std::size_t i) {
        out[i] = detail::walk_one(zm, mp, ped, seed, static_cast<int>(i));
    });
    return out;
}

// Per-cell walker count at frame t; the sum over cells equals the number of
// trajectories.
inline std::vector<int> occupancy(const std::vector<Trajectory>& trajs, int t, int nx, int ny) {
    std::vector<int> n(static_cast<std::size_t>(nx) * ny, 0);
    for (const auto& traj : trajs) {
        const auto& s = traj.steps.at(static_cast<std::size_t>(t));
        if (s.ix < 0 || s.ix >= nx || s.iy < 0 || s.iy >= ny)
            throw std::out_of_range("occupancy: trajectory cell outside raster");
        ++n[static_cast<std::size_t>(s.iy) * nx + s.ix];
    }
    return n;
}

}  // namespace emtrace
