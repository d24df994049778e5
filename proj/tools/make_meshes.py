#!/usr/bin/env python3
"""Regenerate the bundled mesh assets under assets/.

The square meshes are structured grids split along one diagonal. The
horseshoe meshes are quality Delaunay meshes (Shewchuk's Triangle via the
`triangle` Python package) of one fixed boundary polygon, so the fitting
and initial meshes cover exactly the same region.

The horseshoe follows the usual soap-film test domain: a centre curve made
of a half circle of radius 0.5 around the origin (x < 0) and two straight
arms y = +-0.5 for 0 <= x <= 3, thickened by 0.4 on each side, with round
caps at x = 3.
"""
import math
import os
import sys

import numpy as np
import triangle

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "assets")


def write(name, vertices, triangles):
    with open(os.path.join(OUT, name + "_vertices.csv"), "w") as f:
        f.write("x,y\n")
        for x, y in vertices:
            f.write(f"{x:.17g},{y:.17g}\n")
    with open(os.path.join(OUT, name + "_triangles.csv"), "w") as f:
        f.write("v1,v2,v3\n")
        for a, b, c in triangles:
            f.write(f"{a},{b},{c}\n")
    print(name, len(vertices), "vertices", len(triangles), "triangles")


def grid_mesh(x0, x1, y0, y1, cells):
    xs = np.linspace(x0, x1, cells + 1)
    ys = np.linspace(y0, y1, cells + 1)
    verts = [(x, y) for y in ys for x in xs]
    tris = []
    for j in range(cells):
        for i in range(cells):
            a = j * (cells + 1) + i
            b, c, d = a + 1, a + cells + 2, a + cells + 1
            tris.append((a, b, c))
            tris.append((a, c, d))
    return verts, tris


def arc(cx, cy, radius, t0, t1, segments):
    # Points from angle t0 to t1, excluding the end point.
    return [(cx + radius * math.cos(t0 + (t1 - t0) * s / segments),
             cy + radius * math.sin(t0 + (t1 - t0) * s / segments))
            for s in range(segments)]


def horseshoe_polygon():
    pts = []
    pts += [(x, 0.9) for x in np.linspace(0.0, 3.0, 9)[:-1]]        # upper outer edge
    pts += arc(3.0, 0.5, 0.4, math.pi / 2, -math.pi / 2, 6)         # upper cap
    pts += [(x, 0.1) for x in np.linspace(3.0, 0.0, 9)[:-1]]        # upper inner edge
    pts += arc(0.0, 0.0, 0.1, math.pi / 2, 3 * math.pi / 2, 4)      # inner half circle
    pts += [(x, -0.1) for x in np.linspace(0.0, 3.0, 9)[:-1]]       # lower inner edge
    pts += arc(3.0, -0.5, 0.4, math.pi / 2, -math.pi / 2, 6)        # lower cap
    pts += [(x, -0.9) for x in np.linspace(3.0, 0.0, 9)[:-1]]       # lower outer edge
    pts += arc(0.0, 0.0, 0.9, -math.pi / 2, -3 * math.pi / 2, 8)    # outer half circle
    segs = [(i, (i + 1) % len(pts)) for i in range(len(pts))]
    return np.array(pts), np.array(segs)


def horseshoe_mesh(target):
    # Scan (min angle, max area) from the best angle down; the first setting
    # that yields exactly `target` triangles wins.
    pts, segs = horseshoe_polygon()
    for min_angle in np.arange(30.0, 19.9, -0.5):
        for area in np.geomspace(0.2, 0.005, 2000):
            t = triangle.triangulate({"vertices": pts, "segments": segs},
                                     f"pq{min_angle:.1f}a{area:.8f}")
            if len(t["triangles"]) == target:
                return t["vertices"].tolist(), t["triangles"].tolist()
    sys.exit(f"could not hit {target} triangles")


def main():
    os.makedirs(OUT, exist_ok=True)
    write("unit_square_32", *grid_mesh(0.0, 1.0, 0.0, 1.0, 4))
    write("square6_50", *grid_mesh(-6.0, 6.0, -6.0, 6.0, 5))
    write("square6_1568", *grid_mesh(-6.0, 6.0, -6.0, 6.0, 28))
    write("horseshoe_112", *horseshoe_mesh(112))
    write("horseshoe_356", *horseshoe_mesh(356))


if __name__ == "__main__":
    main()
