"""Simulated laser scans.

A robot sits in the 20x20 room among wandering pedestrians; the 220-degree
440-beam scan is drawn in the world frame next to the ground truth.
Output: demos/output/05_laser.png
"""

import math
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from crowdsim import Engine, VelocityCommand
from crowdsim import scenarios

spec = scenarios.load("room20")
eng = Engine(spec)
for _ in range(40):
    eng.step(commands={100: VelocityCommand(0.6, 0.25)})

scan = eng.simulate_scan(100)
row = eng.robot_row(100)
ox, oy = eng.pos[row]
theta = eng.heading[row]

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(12, 6))
snap = eng.snapshot()
for a in snap.agents:
    color = "tab:blue" if a.kind == "robot" else "tab:green"
    ax1.add_patch(plt.Circle((a.x, a.y), 0.3 if a.kind == "robot" else 0.25,
                             color=color))
for s in spec.obstacles.segments:
    ax1.plot([s.a.x, s.b.x], [s.a.y, s.b.y], "k-", lw=2)
ax1.arrow(ox, oy, 1.2 * math.cos(theta), 1.2 * math.sin(theta),
          head_width=0.3, color="tab:blue")
ax1.set_title("ground truth (robot blue, pedestrians green)")
ax1.set_aspect("equal")

finite = np.isfinite(scan.ranges)
angles = theta + scan.angles[finite]
r = scan.ranges[finite]
ax2.plot(ox + r * np.cos(angles), oy + r * np.sin(angles), ".",
         ms=2, color="tab:red")
ax2.plot(ox, oy, "b*", ms=14)
ax2.set_xlim(ax1.get_xlim())
ax2.set_ylim(ax1.get_ylim())
ax2.set_title(f"robot's scan: {int(finite.sum())}/{len(scan.ranges)} beams return")
ax2.set_aspect("equal")

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig.savefig(out / "05_laser.png", dpi=110, bbox_inches="tight")
print(f"beams returning: {int(finite.sum())}/{len(scan.ranges)}, "
      f"nearest obstacle {r.min():.2f} m")
print(f"wrote {out / '05_laser.png'}")
