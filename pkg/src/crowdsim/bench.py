"""Benchmark harness: per-cycle wall time as robots (and their scans) are
added to a scenario."""

from __future__ import annotations

import os
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .engine import Engine
from .errors import PlacementFailure
from .geometry import Vec2
from .scenario import AgentSpec, ScenarioSpec, validate_spec, with_extra_agents

BENCH_ROBOT_RADIUS = 0.3


@dataclass(frozen=True)
class BenchRow:
    robot_count: int
    pedestrian_count: int
    cycles: int
    mean_cycle_ms: float
    stddev_ms: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    cpu_count: int

    def to_csv(self) -> str:
        lines = ["robots,pedestrians,cycles,mean_ms,std_ms"]
        for r in self.rows:
            lines.append(f"{r.robot_count},{r.pedestrian_count},{r.cycles},"
                         f"{r.mean_cycle_ms:.3f},{r.stddev_ms:.3f}")
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        out = [f"{'robots':>7} {'peds':>6} {'cycles':>7} "
               f"{'mean ms':>10} {'std ms':>9}"]
        for r in self.rows:
            out.append(f"{r.robot_count:>7} {r.pedestrian_count:>6} "
                       f"{r.cycles:>7} {r.mean_cycle_ms:>10.2f} "
                       f"{r.stddev_ms:>9.2f}")
        out.append(f"({self.cpu_count} cores)")
        return "\n".join(out)


def place_robots(spec: ScenarioSpec, count: int,
                 radius: float = BENCH_ROBOT_RADIUS) -> tuple[AgentSpec, ...]:
    """Deterministically place stationary robots at free poses.

    Placement depends only on the scenario seed, so reruns (and prefixes
    across increasing counts) are identical.
    """
    rng = np.random.default_rng(spec.config.seed)
    b = spec.world_bounds
    segs = spec.obstacles.segments
    taken = [(a.start, a.radius) for a in spec.agents]
    next_id = max((a.id for a in spec.agents), default=-1) + 1
    placed: list[AgentSpec] = []
    for k in range(count):
        for _ in range(10_000):
            p = Vec2(float(rng.uniform(b.xmin + radius, b.xmax - radius)),
                     float(rng.uniform(b.ymin + radius, b.ymax - radius)))
            if any(s.distance_to(p) < radius + 0.05 for s in segs):
                continue
            if any(p.distance_to(q) < radius + r + 0.05 for q, r in taken):
                continue
            break
        else:
            raise PlacementFailure(f"could not place robot {k + 1}/{count}")
        taken.append((p, radius))
        placed.append(AgentSpec(id=next_id + k, kind="robot", start=p,
                                heading=0.0, radius=radius,
                                pref_speed=1.0, max_speed=2.0))
    return tuple(placed)


def run_bench(spec: ScenarioSpec, robot_counts, cycles: int,
              warmup_cycles: int = 3) -> BenchReport:
    """Mean/stddev cycle wall time for each robot count.

    Robots hold zero velocity; every robot's laser scan is computed every
    tick so sensing cost scales with the count. A few untimed warmup
    cycles populate the plan caches first, so the report reflects
    steady-state cycle cost rather than first-tick planning.
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if any(c < 0 for c in robot_counts):
        raise ValueError("robot counts must be non-negative")
    rows = []
    n_peds = len(spec.pedestrians())
    for count in robot_counts:
        run_spec = with_extra_agents(spec, place_robots(spec, count))
        validate_spec(run_spec)
        engine = Engine(run_spec, validate=False)
        robot_ids = engine.robot_ids()
        for _ in range(warmup_cycles):
            engine.step(scan_robots=robot_ids)
        samples = []
        for _ in range(cycles):
            t0 = time.perf_counter()
            engine.step(scan_robots=robot_ids)
            samples.append((time.perf_counter() - t0) * 1e3)
        rows.append(BenchRow(
            robot_count=count, pedestrian_count=n_peds, cycles=cycles,
            mean_cycle_ms=statistics.fmean(samples),
            stddev_ms=statistics.stdev(samples) if cycles > 1 else 0.0))
    return BenchReport(rows=tuple(rows), cpu_count=os.cpu_count() or 1)


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    x = np.asarray(xs, float)
    y = np.asarray(ys, float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2
