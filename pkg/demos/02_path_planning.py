"""Grid path planning and potential-field steering.

Left: an A* path across a cluttered grid (optimal 8-connected cost, no
corner cutting). Right: the potential-field velocity everywhere in a
walled yard. Output: demos/output/02_planning.png
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from crowdsim import (ObstacleSet, PotentialParams, Rect, Segment, Vec2,
                      astar_plan, potential_field_velocity, rasterize)

rng = np.random.default_rng(3)

# -- A* over random clutter -------------------------------------------------
segments = []
for _ in range(14):
    x, y = rng.uniform(-8, 8, 2)
    dx, dy = rng.uniform(-3, 3, 2)
    if abs(dx) + abs(dy) > 0.3:
        segments.append(Segment(Vec2(x, y), Vec2(np.clip(x + dx, -9, 9),
                                                 np.clip(y + dy, -9, 9))))
clutter = ObstacleSet.from_segments(segments)
grid = rasterize(clutter, resolution=0.25, inflation=0.3,
                 bounds=Rect(-10, -10, 10, 10))
start, goal = Vec2(-9, -9), Vec2(9, 9)
path = astar_plan(grid, start, goal)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(12, 6))
extent = [-10, 10, -10, 10]
ax1.imshow(grid.cells, origin="lower", extent=extent, cmap="Greys", alpha=0.8)
xs = [w.x for w in path.waypoints]
ys = [w.y for w in path.waypoints]
ax1.plot(xs, ys, "tab:blue", lw=2)
ax1.plot(*[(start.x, goal.x), (start.y, goal.y)], "r*", ms=12)
ax1.set_title(f"A*: {len(path.waypoints)} waypoints, cost {path.cost:.2f} m")
ax1.set_aspect("equal")

# -- potential field ----------------------------------------------------------
yard = ObstacleSet.from_segments([
    Segment(Vec2(-5, 2), Vec2(2, 2)),
    Segment(Vec2(0, -4), Vec2(5, -1)),
])
params = PotentialParams(k_att=1.0, k_rep=0.5, rho0=2.0)
pf_goal = Vec2(6, 5)
gx, gy = np.meshgrid(np.linspace(-7, 7, 26), np.linspace(-7, 7, 26))
u = np.zeros_like(gx)
v = np.zeros_like(gy)
for i in range(gx.shape[0]):
    for j in range(gx.shape[1]):
        vel = potential_field_velocity(Vec2(gx[i, j], gy[i, j]), pf_goal,
                                       yard, params, pref_speed=1.3)
        u[i, j], v[i, j] = vel.x, vel.y
ax2.quiver(gx, gy, u, v, np.hypot(u, v), cmap="viridis", scale=40)
for s in yard.segments:
    ax2.plot([s.a.x, s.b.x], [s.a.y, s.b.y], "k-", lw=3)
ax2.plot(pf_goal.x, pf_goal.y, "r*", ms=14)
ax2.set_title("potential-field velocity (clamped to 1.3 m/s)")
ax2.set_aspect("equal")

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig.savefig(out / "02_planning.png", dpi=110, bbox_inches="tight")
print(f"A* cost {path.cost:.3f} m over {len(path.waypoints)} waypoints")
print(f"wrote {out / '02_planning.png'}")
