"""Bundled scenarios: deterministic builders plus packaged JSON files."""

from __future__ import annotations

import importlib.resources
import math
import random

from ..avoidance import OrcaParams, SocialForceParams
from ..geometry import ObstacleSet, Rect, Segment, Vec2
from ..scenario import (AgentSpec, LaserConfig, PointGoal, ScenarioSpec,
                        SimConfig, parse_scenario)

__all__ = ["load", "list_bundled", "open_crossing", "expo_hall",
           "room_square", "corridor_sf", "head_on_pair"]


def _rect_walls(xmin, ymin, xmax, ymax) -> list[Segment]:
    c = [Vec2(xmin, ymin), Vec2(xmax, ymin), Vec2(xmax, ymax), Vec2(xmin, ymax)]
    return [Segment(c[i], c[(i + 1) % 4]) for i in range(4)]


def _place(rng: random.Random, bounds: Rect, radius: float, margin: float,
           segments, taken, max_tries: int = 4000) -> Vec2:
    for _ in range(max_tries):
        p = Vec2(rng.uniform(bounds.xmin + radius + margin, bounds.xmax - radius - margin),
                 rng.uniform(bounds.ymin + radius + margin, bounds.ymax - radius - margin))
        if any(s.distance_to(p) < radius + margin for s in segments):
            continue
        if any(p.distance_to(q) < radius + r + margin for q, r in taken):
            continue
        taken.append((p, radius))
        return p
    raise RuntimeError("could not place agent without overlap")


def head_on_pair(gap: float = 10.0, offset: float = 0.05) -> ScenarioSpec:
    """Two pedestrians meeting head-on across open ground.

    The small lateral offset mirrors a real encounter; a bit-exact
    symmetric meeting is a reciprocal-avoidance deadlock by construction.
    """
    half = gap / 2.0
    agents = (
        AgentSpec(id=0, kind="pedestrian", start=Vec2(-half, offset),
                  targets=(PointGoal(Vec2(half, offset), 0.3),)),
        AgentSpec(id=1, kind="pedestrian", start=Vec2(half, -offset),
                  targets=(PointGoal(Vec2(-half, -offset), 0.3),)),
    )
    return ScenarioSpec(name="cross2", world_bounds=Rect(-20, -20, 20, 20),
                        obstacles=ObstacleSet(), agents=agents,
                        config=SimConfig())


def open_crossing(n_peds: int = 50, seed: int = 0,
                  half: float = 20.0) -> ScenarioSpec:
    """Pedestrians crossing an open square, each bound for a goal at least
    `half` meters away, so paths crisscross the whole area.

    Spacing, speeds, and the finer timestep keep the reciprocal-avoidance
    constraint sets feasible; an all-through-one-point crunch would not be.
    """
    rng = random.Random(seed)
    starts: list[Vec2] = []
    agents = []
    for i in range(n_peds):
        while True:
            p = Vec2(rng.uniform(-half + 1, half - 1),
                     rng.uniform(-half + 1, half - 1))
            if all(p.distance_to(q) >= 2.5 for q in starts):
                break
        starts.append(p)
        while True:
            g = Vec2(rng.uniform(-half + 1, half - 1),
                     rng.uniform(-half + 1, half - 1))
            if g.distance_to(p) >= half:
                break
        agents.append(AgentSpec(
            id=i, kind="pedestrian", start=p,
            radius=0.25, pref_speed=rng.uniform(1.0, 1.5), max_speed=2.0,
            targets=(PointGoal(g, 0.5),)))
    config = SimConfig(dt=0.05, seed=seed,
                       avoidance_params=OrcaParams(time_horizon=2.5,
                                                   time_horizon_obst=2.0,
                                                   neighbor_dist=15.0,
                                                   max_neighbors=10))
    m = half + 3.0
    return ScenarioSpec(name=f"open-crossing-{seed}",
                        world_bounds=Rect(-m, -m, m, m),
                        obstacles=ObstacleSet(), agents=tuple(agents),
                        config=config)


def expo_hall(n_peds: int = 200, seed: int = 7) -> ScenarioSpec:
    """An exhibition floor: booth blocks in a grid, visitors cycling
    between aisle waypoints."""
    rng = random.Random(seed)
    width, height = 80.0, 50.0
    segments = _rect_walls(0.0, 0.0, width, height)

    booth_w, booth_h = 3.0, 2.0
    xs = [8.0 + 8.0 * i for i in range(8)]
    ys = [8.0 + 7.0 * j for j in range(5)]
    for bx in xs:
        for by in ys:
            segments.extend(_rect_walls(bx, by, bx + booth_w, by + booth_h))

    # aisle waypoints between booth rows/columns
    spots = []
    for i in range(len(xs) - 1):
        for j in range(len(ys)):
            spots.append(Vec2(xs[i] + booth_w + 2.5, ys[j] + booth_h / 2.0))
    spots.extend(Vec2(x + booth_w / 2.0, 4.0) for x in xs[::2])
    spots.extend(Vec2(x + booth_w / 2.0, height - 4.0) for x in xs[1::2])

    bounds = Rect(0.0, 0.0, width, height)
    taken: list = []
    agents = []
    for i in range(n_peds):
        start = _place(rng, bounds, 0.25, 0.08, segments, taken)
        k = rng.randrange(3, 6)
        visits = tuple(PointGoal(spots[rng.randrange(len(spots))], 0.6)
                       for _ in range(k))
        pref = min(max(rng.normalvariate(1.3, 0.15), 0.8), 1.8)
        agents.append(AgentSpec(id=i, kind="pedestrian", start=start,
                                radius=0.25, pref_speed=pref, max_speed=2.0,
                                targets=visits, cycle_targets=True))
    config = SimConfig(seed=seed,
                       avoidance_params=OrcaParams(time_horizon=2.0,
                                                   time_horizon_obst=1.0,
                                                   neighbor_dist=10.0,
                                                   max_neighbors=10))
    return ScenarioSpec(name=f"expo-{n_peds}", world_bounds=bounds,
                        obstacles=ObstacleSet.from_segments(segments),
                        agents=tuple(agents), config=config)


def room_square(size: float = 20.0, n_peds: int = 10, seed: int = 3,
                robot_id: int = 100) -> ScenarioSpec:
    """A walled square room with wandering pedestrians and one robot."""
    rng = random.Random(seed)
    half = size / 2.0
    segments = _rect_walls(-half, -half, half, half)
    bounds = Rect(-half, -half, half, half)

    robot_start = Vec2(-half + 5.0, 0.0)
    taken = [(robot_start, 0.3)]
    agents = [AgentSpec(id=robot_id, kind="robot", start=robot_start,
                        heading=0.0, radius=0.3, pref_speed=1.0, max_speed=1.5)]
    for i in range(n_peds):
        start = _place(rng, bounds, 0.25, 0.3, segments, taken)
        goals = tuple(PointGoal(Vec2(rng.uniform(-half + 2, half - 2),
                                     rng.uniform(-half + 2, half - 2)), 0.4)
                      for _ in range(2))
        agents.append(AgentSpec(id=i, kind="pedestrian", start=start,
                                radius=0.25, pref_speed=rng.uniform(0.9, 1.4),
                                max_speed=2.0, targets=goals, cycle_targets=True))
    return ScenarioSpec(name="room20", world_bounds=bounds,
                        obstacles=ObstacleSet.from_segments(segments),
                        agents=tuple(agents), config=SimConfig(seed=seed))


def corridor_sf(n_peds: int = 24, seed: int = 5) -> ScenarioSpec:
    """Two opposing pedestrian streams in a corridor, social-force model."""
    rng = random.Random(seed)
    length, width = 24.0, 5.0
    segments = [Segment(Vec2(0, 0), Vec2(length, 0)),
                Segment(Vec2(0, width), Vec2(length, width))]
    bounds = Rect(0.0, 0.0, length, width)
    taken: list = []
    agents = []
    for i in range(n_peds):
        eastbound = i % 2 == 0
        x_lo, x_hi = (1.0, 9.0) if eastbound else (length - 9.0, length - 1.0)
        for _ in range(2000):
            p = Vec2(rng.uniform(x_lo, x_hi), rng.uniform(0.6, width - 0.6))
            if all(p.distance_to(q) >= 0.25 + r + 0.08 for q, r in taken):
                taken.append((p, 0.25))
                break
        goal_x = length - 1.5 if eastbound else 1.5
        agents.append(AgentSpec(
            id=i, kind="pedestrian", start=p, radius=0.25,
            pref_speed=rng.uniform(1.1, 1.4), max_speed=2.0,
            targets=(PointGoal(Vec2(goal_x, p.y), 0.8),)))
    # longer-range interaction and a finer step keep the soft model's
    # overlap depth well below a tenth of the combined radii
    config = SimConfig(dt=0.05, avoidance="social_force",
                       avoidance_params=SocialForceParams(
                           A=6.0, B=0.35, wall_A=6.0, wall_B=0.1),
                       seed=seed)
    return ScenarioSpec(name="corridor-sf", world_bounds=bounds,
                        obstacles=ObstacleSet.from_segments(segments),
                        agents=tuple(agents), config=config)


_BUNDLED = {
    "cross2": lambda: head_on_pair(),
    "expo_200": lambda: expo_hall(200, seed=7),
    "expo_1000": lambda: expo_hall(1000, seed=11),
    "room20": lambda: room_square(),
    "corridor_sf": lambda: corridor_sf(),
}


def list_bundled() -> list[str]:
    return sorted(_BUNDLED)


def load(name: str) -> ScenarioSpec:
    """Load a packaged scenario by name (parses the shipped JSON)."""
    data = importlib.resources.files(__package__).joinpath("data", f"{name}.json")
    return parse_scenario(data.read_text(encoding="utf-8"))


def build(name: str) -> ScenarioSpec:
    """Regenerate a bundled scenario from its builder."""
    return _BUNDLED[name]()
