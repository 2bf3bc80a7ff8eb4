// SPDX-License-Identifier: Apache-2.0
//
// Pedestrian mobility demo: loads the bundled town scene, simulates a group
// of correlated random walkers and prints per-zone cell counts plus one
// summary line per walker.

#include <cstdio>
#include <string>

#include "emtrace/mobility.hpp"
#include "emtrace/scene.hpp"

using namespace emtrace;

int main(int argc, char** argv) {
    const std::string path =
        argc > 1 ? argv[1] : std::string(EMTRACE_SCENE_DIR) + "/town.json";
    Scene scene = load_scene(path);

    const GridSpec g = make_grid(scene, 1.25, 10.0, 1.5);
    const CellMask mask = build_mask(scene, g);
    const ZoneMap zones = build_zone_map(scene, g, mask);

    int counts[3] = {0, 0, 0};
    for (int iy = 0; iy < zones.ny; ++iy)
        for (int ix = 0; ix < zones.nx; ++ix)
            ++counts[static_cast<int>(
                zones.zone[static_cast<std::size_t>(iy) * zones.nx + ix])];
    std::printf("zones: pedestrian=%d street=%d building=%d\n", counts[0],
                counts[1], counts[2]);

    MobilityParams mp;
    const auto trajs = simulate(zones, mp, 8, 42, 1);

    for (std::size_t w = 0; w < trajs.size(); ++w) {
        const auto& tr = trajs[w];
        double moved = 0.0;
        int paused = 0;
        for (std::size_t t = 1; t < tr.steps.size(); ++t) {
            moved += (tr.steps[t].pos - tr.steps[t - 1].pos).norm();
            paused += tr.steps[t].paused ? 1 : 0;
        }
        std::printf(
            "walker %zu: kappa %5.2f start (%7.2f,%7.2f) moved %6.1f m paused %4.1f%%\n",
            w, tr.kappa, tr.spawn.x, tr.spawn.y, moved,
            100.0 * paused / static_cast<double>(tr.steps.size()));
    }
    return 0;
}
