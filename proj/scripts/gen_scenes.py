#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright (c) 2026 the emtrace authors
"""Generate the bundled scene files under scenes/.

Buildings are open-bottom boxes (walls plus roof) with outward winding so the
upward parity ray sees a watertight shell above ground; the ground is a
separate plane. Run from the repository root:

    python3 scripts/gen_scenes.py
"""

import json
import pathlib

MAT_BUILDING = 0
MAT_GROUND = 1

MATERIALS = [
    {"eps_re": 5.0, "eps_im": -0.1, "mu_re": 1.0, "mu_im": 0.0},
    {"eps_re": 15.0, "eps_im": -0.5, "mu_re": 1.0, "mu_im": 0.0},
]


def quad(tris, base, a, b, c, d, mat):
    tris.append([base + a, base + b, base + c, mat])
    tris.append([base + a, base + c, base + d, mat])


def box(verts, tris, x0, x1, y0, y1, h, mat=MAT_BUILDING):
    """Axis-aligned box from z=0 to z=h: four walls and a roof, outward normals."""
    base = len(verts)
    verts += [
        [x0, y0, 0.0], [x1, y0, 0.0], [x1, y1, 0.0], [x0, y1, 0.0],
        [x0, y0, h], [x1, y0, h], [x1, y1, h], [x0, y1, h],
    ]
    quad(tris, base, 0, 1, 5, 4, mat)  # south, -y
    quad(tris, base, 1, 2, 6, 5, mat)  # east, +x
    quad(tris, base, 2, 3, 7, 6, mat)  # north, +y
    quad(tris, base, 3, 0, 4, 7, mat)  # west, -x
    quad(tris, base, 4, 5, 6, 7, mat)  # roof, +z


def ground(verts, tris, x0, x1, y0, y1, mat=MAT_GROUND):
    base = len(verts)
    verts += [[x0, y0, 0.0], [x1, y0, 0.0], [x1, y1, 0.0], [x0, y1, 0.0]]
    quad(tris, base, 0, 1, 2, 3, mat)


def rect(x0, x1, y0, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def write(path, scene):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(scene, f, indent=1)
        f.write("\n")
    print(f"wrote {path}: {len(scene['vertices'])} vertices, "
          f"{len(scene['triangles'])} triangles")


def freespace():
    return {
        "name": "freespace",
        "vertices": [],
        "triangles": [],
        "materials": MATERIALS,
        "boundaries": {
            "C1": rect(-5.0, 5.0, -5.0, 5.0),
            "C2": {"origin": [-20.0, -20.0], "Lx": 40.0, "Ly": 40.0},
        },
    }


def screen():
    """One slab between transmitter and a shadowed street, over ground."""
    verts, tris = [], []
    ground(verts, tris, -60.0, 60.0, -60.0, 60.0)
    box(verts, tris, -15.0, 15.0, -2.0, 2.0, 20.0)
    return {
        "name": "screen",
        "vertices": verts,
        "triangles": tris,
        "materials": MATERIALS,
        "boundaries": {
            "C1": rect(-10.0, 10.0, -40.0, -20.0),
            "C2": {"origin": [-25.0, -50.0], "Lx": 50.0, "Ly": 100.0},
        },
        "streets": [rect(-25.0, 25.0, 10.0, 20.0)],
    }


def town():
    """Six-block town, 120 x 80 m target area centred on the origin.

    Vertical streets at x in [-28,-20] and [8,16], one horizontal street at
    y in [-8,8]; everything else inside C2 that is not a building is
    pedestrian ground. The deployment region C1 is an L on the roof of the
    north-centre building; the two interferers sit far outside the area.
    """
    verts, tris = [], []
    ground(verts, tris, -100.0, 100.0, -70.0, 70.0)
    box(verts, tris, -52.0, -34.0, 12.0, 34.0, 24.0)   # NW
    box(verts, tris, -16.0, 4.0, 12.0, 34.0, 26.0)     # NC, hosts the BS roof
    box(verts, tris, 22.0, 48.0, 12.0, 34.0, 20.0)     # NE
    box(verts, tris, -52.0, -34.0, -34.0, -12.0, 18.0)  # SW
    box(verts, tris, -14.0, 2.0, -34.0, -12.0, 22.0)   # SC
    box(verts, tris, 24.0, 52.0, -36.0, -12.0, 35.0)   # SE, tall: deep pocket behind
    return {
        "name": "town",
        "vertices": verts,
        "triangles": tris,
        "materials": MATERIALS,
        "boundaries": {
            # L-shaped deployment region on the NC roof (footprint -16..4, 12..34).
            "C1": [[-14.0, 14.0], [2.0, 14.0], [2.0, 22.0], [-4.0, 22.0],
                   [-4.0, 32.0], [-14.0, 32.0]],
            "C2": {"origin": [-60.0, -40.0], "Lx": 120.0, "Ly": 80.0},
        },
        "interferers": [[-421.0, 26.0, 30.0], [520.0, 2.8, 30.0]],
        "streets": [
            rect(-60.0, 60.0, -8.0, 8.0),    # main east-west street
            rect(-28.0, -20.0, 8.0, 40.0),   # west vertical, north half
            rect(-28.0, -20.0, -40.0, -8.0),  # west vertical, south half
            rect(8.0, 16.0, 8.0, 40.0),      # east vertical, north half
            rect(8.0, 16.0, -40.0, -8.0),    # east vertical, south half
        ],
    }


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "scenes"
    write(out / "freespace.json", freespace())
    write(out / "screen.json", screen())
    write(out / "town.json", town())


if __name__ == "__main__":
    main()
