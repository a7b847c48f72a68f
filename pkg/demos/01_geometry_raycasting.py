"""Raycasting and conservative grid rasterization.

Casts a fan of rays through a small segment world, then rasterizes the
same world onto an occupancy grid with an inflation radius and overlays
both. Output: demos/output/01_geometry.png
"""

import math
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from crowdsim import NO_HIT, ObstacleSet, Rect, Segment, Vec2, ray_cast, rasterize

world = ObstacleSet.from_segments([
    Segment(Vec2(2, -3), Vec2(2, 3)),
    Segment(Vec2(-1, 4), Vec2(5, 4)),
    Segment(Vec2(-4, -2), Vec2(-1, -4)),
])
discs = [(Vec2(-2, 2), 0.6), (Vec2(4, 1), 0.5)]
origin = Vec2(0.0, 0.0)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 5))

for ax in (ax1, ax2):
    for s in world.segments:
        ax.plot([s.a.x, s.b.x], [s.a.y, s.b.y], "k-", lw=2)
    ax.set_aspect("equal")

hits = 0
for k in range(120):
    ang = 2 * math.pi * k / 120
    d = Vec2(math.cos(ang), math.sin(ang))
    t = ray_cast(origin, d, 8.0, world, discs)
    r = 8.0 if t == NO_HIT else t
    color = "tab:orange" if t != NO_HIT else "0.85"
    ax1.plot([origin.x, origin.x + r * d.x], [origin.y, origin.y + r * d.y],
             color=color, lw=0.6)
    hits += t != NO_HIT
for c, r in discs:
    ax1.add_patch(plt.Circle((c.x, c.y), r, fill=False, color="k", lw=2))
ax1.plot(origin.x, origin.y, "b*", ms=12)
ax1.set_title(f"120 rays, {hits} hits within 8 m")

grid = rasterize(world, resolution=0.25, inflation=0.3,
                 bounds=Rect(-6, -6, 6, 6))
extent = [grid.origin.x, grid.origin.x + grid.width * grid.resolution,
          grid.origin.y, grid.origin.y + grid.height * grid.resolution]
ax2.imshow(grid.cells, origin="lower", extent=extent, cmap="Reds", alpha=0.7)
ax2.set_title(f"occupancy grid, res 0.25 m, inflation 0.3 m "
              f"({grid.occupied_count} cells)")

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig.savefig(out / "01_geometry.png", dpi=110, bbox_inches="tight")
print(f"rays hitting something: {hits}/120")
print(f"occupied cells: {grid.occupied_count}/{grid.width * grid.height}")
print(f"wrote {out / '01_geometry.png'}")
