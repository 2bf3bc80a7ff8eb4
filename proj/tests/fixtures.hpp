// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

// Programmatic scenes shared by the test binaries. Everything small enough
// to reason about by hand lives here; the bundled town scene is loaded from
// EMTRACE_SCENE_DIR.

#include <string>
#include <utility>
#include <vector>

#include "emtrace/scene.hpp"

namespace fixtures {

using namespace emtrace;

inline std::string scene_dir() { return EMTRACE_SCENE_DIR; }

inline void add_box(TriangleMesh& m, double x0, double x1, double y0, double y1,
                    double h, std::uint32_t mat) {
    const std::uint32_t b = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(),
                      {{x0, y0, 0.0}, {x1, y0, 0.0}, {x1, y1, 0.0}, {x0, y1, 0.0},
                       {x0, y0, h},   {x1, y0, h},   {x1, y1, h},   {x0, y1, h}});
    const std::uint32_t f[5][4] = {{0, 1, 5, 4},   // south wall, outward -y
                                   {1, 2, 6, 5},   // east
                                   {2, 3, 7, 6},   // north
                                   {3, 0, 4, 7},   // west
                                   {4, 5, 6, 7}};  // roof
    for (const auto& q : f) {
        m.tris.push_back({{b + q[0], b + q[1], b + q[2]}, mat});
        m.tris.push_back({{b + q[0], b + q[2], b + q[3]}, mat});
    }
}

inline Polygon rect_poly(double x0, double y0, double x1, double y1) {
    Polygon p;
    p.pts = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    return p;
}

// Empty mesh: pure line-of-sight everywhere inside a 40 m square area.
inline Scene freespace_scene() {
    Boundaries b;
    b.c1 = rect_poly(-5.0, -5.0, 5.0, 5.0);
    b.c2 = {{-20.0, -20.0}, 40.0, 40.0};
    return build_scene({}, {}, b, {}, {}, "freespace");
}

// Single large ground plane. The default permittivity is a near-PEC limit so
// two-ray interference has textbook form; pass the real ground instead when
// the test wants a lossy dielectric.
inline Scene ground_scene(cplx eps = {1e6, -1e6}, double half = 2000.0) {
    TriangleMesh mesh;
    mesh.vertices = {{-half, -half, 0.0}, {half, -half, 0.0},
                     {half, half, 0.0},   {-half, half, 0.0}};
    mesh.tris = {{{0, 1, 2}, 0}, {{0, 2, 3}, 0}};
    std::vector<Material> mats = {{eps}};
    Boundaries b;
    b.c1 = rect_poly(-half / 2, -half / 2, half / 2, half / 2);
    b.c2 = {{-half, -half}, 2.0 * half, 2.0 * half};
    return build_scene(std::move(mesh), std::move(mats), b, {}, {}, "ground");
}

// A 30 x 4 x 20 m slab on a 240 m ground square: one shadow region, four
// vertical wedges reachable for diffraction, plus the two long roof edges.
inline Scene screen_scene() {
    TriangleMesh mesh;
    const double half = 120.0;
    mesh.vertices = {{-half, -half, 0.0}, {half, -half, 0.0},
                     {half, half, 0.0},   {-half, half, 0.0}};
    mesh.tris = {{{0, 1, 2}, 1}, {{0, 2, 3}, 1}};
    add_box(mesh, -15.0, 15.0, -2.0, 2.0, 20.0, 0);
    std::vector<Material> mats = {{{5.0, -0.1}}, {{15.0, -0.5}}};
    Boundaries b;
    b.c1 = rect_poly(-25.0, -50.0, 25.0, 50.0);
    b.c2 = {{-25.0, -50.0}, 50.0, 100.0};
    return build_scene(std::move(mesh), std::move(mats), b, {}, {}, "screen");
}

// One 20 m cube on open ground, centered at the origin; handy for the
// point-in-building parity test and wedge bookkeeping.
inline Scene cube_scene() {
    TriangleMesh mesh;
    const double half = 100.0;
    mesh.vertices = {{-half, -half, 0.0}, {half, -half, 0.0},
                     {half, half, 0.0},   {-half, half, 0.0}};
    mesh.tris = {{{0, 1, 2}, 1}, {{0, 2, 3}, 1}};
    add_box(mesh, -10.0, 10.0, -10.0, 10.0, 20.0, 0);
    std::vector<Material> mats = {{{5.0, -0.1}}, {{15.0, -0.5}}};
    Boundaries b;
    b.c1 = rect_poly(-40.0, -40.0, 40.0, 40.0);
    b.c2 = {{-half, -half}, 2.0 * half, 2.0 * half};
    return build_scene(std::move(mesh), std::move(mats), b, {}, {}, "cube");
}

inline Scene town_scene() { return load_scene(scene_dir() + "/town.json"); }

}  // namespace fixtures
