"""Shared test utilities: independent oracles, random generators, and a
minimal wire client.

Oracles here deliberately do not reuse the library's search/solve code
paths; they re-derive expected values from first principles.
"""

import heapq
import math
import random
import socket

import numpy as np

from crowdsim.protocol import decode_message, encode_message

from crowdsim.geometry import ObstacleSet, Rect, Segment, Vec2
from crowdsim.scenario import (AgentSpec, AStarParams, LaserConfig, PointGoal,
                               RegionGoal, ScenarioSpec, SimConfig)
from crowdsim.avoidance import OrcaParams, SocialForceParams
from crowdsim.navigation import PotentialParams

SQRT2 = math.sqrt(2.0)


class WireClient:
    """Line-oriented test client for the control service."""

    def __init__(self, host, port, timeout=10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.reader = self.sock.makefile("rb")

    def send(self, msg: dict):
        self.sock.sendall(encode_message(msg))

    def send_raw(self, data: bytes):
        self.sock.sendall(data)

    def recv(self) -> dict:
        line = self.reader.readline()
        if not line:
            raise ConnectionError("server closed connection")
        return decode_message(line)

    def recv_until(self, mtype: str, limit: int = 200) -> tuple[dict, list]:
        """Read until a message of `mtype`; returns (it, everything before)."""
        seen = []
        for _ in range(limit):
            msg = self.recv()
            if msg["type"] == mtype:
                return msg, seen
            seen.append(msg)
        raise AssertionError(f"no {mtype!r} within {limit} messages")

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


def dijkstra_grid_cost(cells, resolution, start, goal):
    """Plain Dijkstra over the 8-connected grid; None when unreachable.

    Movement rule mirrors the planner contract: diagonal steps are
    forbidden only when both flanking cells are occupied. Costs are
    reported canonically as n_axial*res + n_diag*(res*sqrt(2)).
    """
    h, w = cells.shape
    sx, sy = start
    gx, gy = goal
    if cells[sy, sx] or cells[gy, gx]:
        return None
    dist = {(sx, sy): (0, 0)}
    done = set()
    heap = [(0.0, sx, sy)]
    while heap:
        d, x, y = heapq.heappop(heap)
        if (x, y) in done:
            continue
        done.add((x, y))
        if (x, y) == (gx, gy):
            na, nd = dist[(x, y)]
            return na * resolution + nd * (resolution * SQRT2)
        na, nd = dist[(x, y)]
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nx, ny = x + dx, y + dy
                if not (0 <= nx < w and 0 <= ny < h):
                    continue
                if cells[ny, nx] or (nx, ny) in done:
                    continue
                if dx != 0 and dy != 0 and cells[y, nx] and cells[ny, x]:
                    continue
                cand = (na + (1 if dx == 0 or dy == 0 else 0),
                        nd + (1 if dx != 0 and dy != 0 else 0))
                cand_cost = cand[0] * resolution + cand[1] * (resolution * SQRT2)
                prev = dist.get((nx, ny))
                if prev is None or cand_cost < prev[0] * resolution + prev[1] * (resolution * SQRT2):
                    dist[(nx, ny)] = cand
                    heapq.heappush(heap, (cand_cost, nx, ny))
    return None


def disc_collision_time(rel_pos, rel_vel, radius):
    """Earliest t > 0 with |rel_pos - t*rel_vel| <= radius, else inf.

    rel_pos points from agent to neighbor; the gap closes along rel_vel.
    """
    px, py = rel_pos
    vx, vy = rel_vel
    # |p - t v|^2 = r^2
    a = vx * vx + vy * vy
    b = -(px * vx + py * vy)
    c = px * px + py * py - radius * radius
    if c <= 0.0:
        return 0.0
    if a == 0.0:
        return math.inf
    disc = b * b - a * c
    if disc < 0.0:
        return math.inf
    sq = math.sqrt(disc)
    t1 = (-b - sq) / a
    if t1 > 0.0:
        return t1
    t2 = (-b + sq) / a
    if t2 > 0.0:
        return t2
    return math.inf


from numba import njit, prange


@njit(cache=True, parallel=True)
def _disc_sampling_objectives(samples, lines_arr, pref_x, pref_y):
    """One pass over candidate velocities: best feasible distance to the
    preference and best max-violation. Min-reductions only, so the result
    is thread-count independent."""
    best_feasible = np.inf
    best_violation = np.inf
    for i in prange(samples.shape[0]):
        sx = samples[i, 0]
        sy = samples[i, 1]
        worst = -np.inf
        for j in range(lines_arr.shape[0]):
            v = lines_arr[j, 2] * (lines_arr[j, 1] - sy) \
                - lines_arr[j, 3] * (lines_arr[j, 0] - sx)
            if v > worst:
                worst = v
        if worst <= 0.0:
            d = math.hypot(sx - pref_x, sy - pref_y)
            best_feasible = min(best_feasible, d)
        best_violation = min(best_violation, worst)
    return best_feasible, best_violation


def disc_samples(max_speed, n_samples, seed=12):
    rng = np.random.default_rng(seed)
    r = max_speed * np.sqrt(rng.random(n_samples))
    th = rng.random(n_samples) * 2.0 * np.pi
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def sampling_oracle_objectives(samples, lines_arr, v_pref):
    """(best_feasible_distance_or_inf, best_max_violation) over samples."""
    return _disc_sampling_objectives(samples, lines_arr,
                                     float(v_pref[0]), float(v_pref[1]))


def sample_disc_optimum(lines_arr, v_pref, max_speed, n_samples, seed=0):
    """Dense-sampling LP oracle over the speed disc.

    Returns (best_point, best_objective, feasible_exists). For feasible
    sets the objective is distance to v_pref over feasible samples; when no
    sample is feasible it is the largest constraint violation.
    """
    rng = np.random.default_rng(seed)
    n = int(n_samples)
    r = max_speed * np.sqrt(rng.random(n))
    th = rng.random(n) * 2.0 * np.pi
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    if lines_arr.shape[0]:
        # violation_i(v) = det(dir_i, point_i - v), positive when infeasible
        px = lines_arr[:, 0][None, :]
        py = lines_arr[:, 1][None, :]
        dx = lines_arr[:, 2][None, :]
        dy = lines_arr[:, 3][None, :]
        viol = dx * (py - pts[:, 1][:, None]) - dy * (px - pts[:, 0][:, None])
        worst = viol.max(axis=1)
    else:
        worst = np.full(n, -np.inf)
    feasible = worst <= 0.0
    if feasible.any():
        d = np.hypot(pts[:, 0] - v_pref[0], pts[:, 1] - v_pref[1])
        d[~feasible] = np.inf
        k = int(np.argmin(d))
        return pts[k], float(d[k]), True
    k = int(np.argmin(worst))
    return pts[k], float(worst[k]), False


def random_lines(rng, max_lines=12, span=3.0):
    """Random ORCA-style constraint set as an (L, 4) array."""
    n = rng.randrange(0, max_lines + 1)
    arr = np.empty((n, 4))
    for i in range(n):
        ang = rng.uniform(0, 2 * math.pi)
        arr[i, 0] = rng.uniform(-span, span)
        arr[i, 1] = rng.uniform(-span, span)
        arr[i, 2] = math.cos(ang)
        arr[i, 3] = math.sin(ang)
    return arr


def random_scenario(rng: random.Random) -> ScenarioSpec:
    """Random valid scenario for round-trip testing."""
    size = rng.uniform(20, 60)
    bounds = Rect(-size / 2, -size / 2, size / 2, size / 2)
    margin = 2.0
    segments = []
    for _ in range(rng.randrange(0, 6)):
        x = rng.uniform(bounds.xmin + margin, bounds.xmax - margin)
        y = rng.uniform(bounds.ymin + margin, bounds.ymax - margin)
        dx = rng.uniform(-3, 3)
        dy = rng.uniform(-3, 3)
        if abs(dx) + abs(dy) < 0.1:
            dx = 1.0
        x2 = min(max(x + dx, bounds.xmin), bounds.xmax)
        y2 = min(max(y + dy, bounds.ymin), bounds.ymax)
        if (x, y) != (x2, y2):
            segments.append(Segment(Vec2(x, y), Vec2(x2, y2)))
    obstacles = ObstacleSet.from_segments(segments)

    agents = []
    occupied = []
    next_id = 0
    for _ in range(rng.randrange(1, 12)):
        radius = rng.uniform(0.15, 0.4)
        for _attempt in range(200):
            p = Vec2(rng.uniform(bounds.xmin + radius, bounds.xmax - radius),
                     rng.uniform(bounds.ymin + radius, bounds.ymax - radius))
            if any(s.distance_to(p) < radius + 0.05 for s in segments):
                continue
            if any(p.distance_to(q) < radius + r + 0.05 for q, r in occupied):
                continue
            break
        else:
            continue
        occupied.append((p, radius))
        kind = "robot" if rng.random() < 0.25 else "pedestrian"
        targets = ()
        if kind == "pedestrian":
            targets = tuple(
                PointGoal(Vec2(rng.uniform(bounds.xmin, bounds.xmax),
                               rng.uniform(bounds.ymin, bounds.ymax)),
                          rng.uniform(0.1, 0.5))
                if rng.random() < 0.7 else
                RegionGoal(Vec2(rng.uniform(bounds.xmin, bounds.xmax),
                                rng.uniform(bounds.ymin, bounds.ymax)),
                           Vec2(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)))
                for _ in range(rng.randrange(0, 4)))
        pref = rng.uniform(0.0, 1.8)
        agents.append(AgentSpec(
            id=next_id, kind=kind, start=p,
            heading=rng.uniform(-math.pi, math.pi) if kind == "robot" else 0.0,
            radius=radius, pref_speed=pref,
            max_speed=pref + rng.uniform(0.0, 1.0),
            targets=targets,
            cycle_targets=rng.random() < 0.5 if kind == "pedestrian" else False))
        next_id += rng.randrange(1, 4)

    planner = rng.choice(["astar", "potential_field"])
    avoidance = rng.choice(["orca", "social_force"])
    config = SimConfig(
        dt=rng.choice([0.05, 0.1, 0.25]),
        planner=planner,
        avoidance=avoidance,
        planner_params=(AStarParams(resolution=rng.choice([0.2, 0.25, 0.5]),
                                    inflation=rng.choice([None, 0.3]),
                                    lookahead=rng.uniform(0.5, 2.0))
                        if planner == "astar" else
                        PotentialParams(k_att=rng.uniform(0.5, 2.0),
                                        k_rep=rng.uniform(0.1, 1.0),
                                        rho0=rng.uniform(1.0, 3.0))),
        avoidance_params=(OrcaParams(time_horizon=rng.uniform(1.0, 4.0),
                                     neighbor_dist=rng.uniform(5.0, 15.0),
                                     max_neighbors=rng.randrange(1, 12))
                          if avoidance == "orca" else
                          SocialForceParams(tau=rng.uniform(0.3, 1.0))),
        laser=LaserConfig(beam_count=rng.choice([2, 90, 440]),
                          max_range=rng.uniform(5, 30)),
        seed=rng.randrange(0, 2**63))
    return ScenarioSpec(name=f"random-{rng.randrange(10**9)}",
                        world_bounds=bounds, obstacles=obstacles,
                        agents=tuple(agents), config=config)
