"""Cycle cost at crowd scale.

Runs the 200-visitor exhibition-hall scenario and plots per-phase cycle
times, then reruns with stationary scanning robots added to show the
per-robot sensing cost. Output: demos/output/04_scale.png
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from crowdsim import Engine
from crowdsim import scenarios
from crowdsim.bench import linear_fit, run_bench

spec = scenarios.load("expo_200")
eng = Engine(spec)
phases = {"plan": [], "avoid": [], "sense": [], "total": []}
for _ in range(150):
    stats, _ = eng.step()
    phases["plan"].append(stats.plan_ms)
    phases["avoid"].append(stats.avoid_ms)
    phases["sense"].append(stats.sense_ms)
    phases["total"].append(stats.total_ms)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(12, 4.5))
for name, ys in phases.items():
    ax1.plot(ys, lw=1, label=name)
ax1.set_yscale("log")
ax1.set_xlabel("tick")
ax1.set_ylabel("ms")
ax1.legend()
ax1.set_title("expo_200 phase times (first tick pays for plan caches)")

counts = [0, 2, 4, 6, 8]
report = run_bench(spec, counts, cycles=40)
means = [r.mean_cycle_ms for r in report.rows]
slope, intercept, r2 = linear_fit(counts, means)
ax2.plot(counts, means, "o-")
ax2.plot(counts, [slope * c + intercept for c in counts], "--",
         label=f"fit: {slope:.2f} ms/robot, R$^2$={r2:.3f}")
ax2.set_xlabel("scanning robots")
ax2.set_ylabel("mean cycle ms")
ax2.legend()
ax2.set_title("sensing cost grows linearly with robots")

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig.savefig(out / "04_scale.png", dpi=110, bbox_inches="tight")
steady = sum(phases["total"][10:]) / len(phases["total"][10:])
print(f"steady-state cycle: {steady:.1f} ms for 200 pedestrians")
print(f"robot scan cost: {slope:.2f} ms per robot (R^2 {r2:.3f})")
print(f"wrote {out / '04_scale.png'}")
