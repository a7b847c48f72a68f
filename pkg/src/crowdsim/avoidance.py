"""Per-tick collision avoidance: a generalized social force model and
ORCA (reciprocal velocity obstacles) with its incremental linear program.

All functions are pure over a read-only snapshot of agent states, so every
agent's adjustment may be evaluated in parallel within a tick. Summation
and constraint orders are fixed (walls by segment index, then neighbors by
ascending agent id) for bitwise determinism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import kernels
from .geometry import ObstacleSet, Vec2

if TYPE_CHECKING:  # pragma: no cover
    from .engine import AgentState


@dataclass(frozen=True)
class SocialForceParams:
    """Helbing-style exponential interaction model.

    `robot_factor` scales the interaction strength A against robot
    neighbors (1.0 treats robots exactly like pedestrians).
    """

    tau: float = 0.5
    A: float = 2.0
    B: float = 0.08
    wall_A: float = 4.0
    wall_B: float = 0.06
    neighbor_dist: float = 5.0
    robot_factor: float = 1.0


@dataclass(frozen=True)
class OrcaParams:
    time_horizon: float = 2.0
    time_horizon_obst: float = 2.0
    neighbor_dist: float = 10.0
    max_neighbors: int = 10


@dataclass(frozen=True)
class OrcaLine:
    """Half-plane constraint in velocity space; the feasible side is the
    left half-plane of `direction`."""

    point: Vec2
    direction: Vec2

    def satisfied_by(self, v: Vec2, tol: float = 0.0) -> bool:
        return self.direction.cross(v - self.point) >= -tol

    def violation(self, v: Vec2) -> float:
        """Signed distance onto the infeasible side (negative when inside)."""
        return self.direction.cross(self.point - v)


def _clamp_speed(vx: float, vy: float, max_speed: float) -> Vec2:
    speed = math.hypot(vx, vy)
    if speed > max_speed and speed > 0.0:
        return Vec2(vx / speed * max_speed, vy / speed * max_speed)
    return Vec2(vx, vy)


def social_force_velocity(agent: "AgentState", v_pref: Vec2,
                          neighbors: Sequence["AgentState"],
                          obstacles: ObstacleSet,
                          params: SocialForceParams, dt: float) -> Vec2:
    """One social-force integration step, clamped to the agent's max speed.

    Force = (v_pref - v)/tau plus exponential repulsions from neighbors and
    wall segments within `neighbor_dist`. Exactly coincident agents repel
    along a direction hashed from the id pair.
    """
    fx = (v_pref.x - agent.velocity.x) / params.tau
    fy = (v_pref.y - agent.velocity.y) / params.tau
    for other in sorted(neighbors, key=lambda n: n.id):
        d = agent.position.distance_to(other.position)
        if d > params.neighbor_dist:
            continue
        a = params.A * params.robot_factor if other.kind == "robot" else params.A
        gx, gy = kernels.sf_neighbor_force(
            agent.position.x, agent.position.y, agent.radius, agent.id,
            other.position.x, other.position.y, other.radius, other.id,
            a, params.B)
        fx += gx
        fy += gy
    for seg in obstacles.segments:
        if seg.distance_to(agent.position) > params.neighbor_dist:
            continue
        gx, gy = kernels.sf_wall_force(
            agent.position.x, agent.position.y, agent.radius,
            seg.a.x, seg.a.y, seg.b.x, seg.b.y, params.wall_A, params.wall_B)
        fx += gx
        fy += gy
    return _clamp_speed(agent.velocity.x + dt * fx,
                        agent.velocity.y + dt * fy, agent.max_speed)


def _retained_neighbors(agent: "AgentState", neighbors: Sequence["AgentState"],
                        params: OrcaParams) -> list["AgentState"]:
    scored = sorted(
        ((agent.position.distance_to(n.position), n.id, n) for n in neighbors
         if agent.position.distance_to(n.position) <= params.neighbor_dist),
        key=lambda t: (t[0], t[1]))
    kept = [n for _, _, n in scored[:params.max_neighbors]]
    kept.sort(key=lambda n: n.id)
    return kept


def orca_lines(agent: "AgentState", neighbors: Sequence["AgentState"],
               obstacles: ObstacleSet, params: OrcaParams, dt: float) -> list[OrcaLine]:
    """ORCA constraints for one agent.

    Wall lines come first (ascending segment index, full responsibility,
    `time_horizon_obst`), then one line per retained neighbor (the nearest
    `max_neighbors` within `neighbor_dist`, emitted in ascending id order,
    responsibility split in half). Overlaps are resolved within `dt`.
    """
    out: list[OrcaLine] = []
    inv_obst = 1.0 / params.time_horizon_obst
    inv_tau = 1.0 / params.time_horizon
    inv_dt = 1.0 / dt
    cutoff = agent.radius + agent.max_speed * params.time_horizon_obst
    for seg in obstacles.segments:
        if seg.distance_to(agent.position) > cutoff:
            continue
        px, py, dx, dy = kernels.obstacle_orca_line(
            agent.position.x, agent.position.y,
            agent.velocity.x, agent.velocity.y, agent.radius,
            seg.a.x, seg.a.y, seg.b.x, seg.b.y, inv_obst, inv_dt)
        out.append(OrcaLine(Vec2(px, py), Vec2(dx, dy)))
    for other in _retained_neighbors(agent, neighbors, params):
        px, py, dx, dy = kernels.agent_orca_line(
            agent.position.x, agent.position.y,
            agent.velocity.x, agent.velocity.y, agent.radius, agent.id,
            other.position.x, other.position.y,
            other.velocity.x, other.velocity.y, other.radius, other.id,
            inv_tau, inv_dt)
        out.append(OrcaLine(Vec2(px, py), Vec2(dx, dy)))
    return out


def lines_as_array(lines: Sequence[OrcaLine]) -> np.ndarray:
    arr = np.empty((len(lines), 4), np.float64)
    for i, ln in enumerate(lines):
        arr[i, 0] = ln.point.x
        arr[i, 1] = ln.point.y
        arr[i, 2] = ln.direction.x
        arr[i, 3] = ln.direction.y
    return arr


def orca_solve(lines: Sequence[OrcaLine], v_pref: Vec2, max_speed: float,
               fixed_count: int = 0) -> Vec2:
    """Point of the feasible set closest to `v_pref` within the speed disc.

    When the half-planes and disc have empty intersection, falls back to
    minimizing the largest constraint violation; the first `fixed_count`
    lines (walls) stay hard in that fallback.
    """
    if max_speed <= 0.0:
        raise ValueError("max_speed must be positive")
    if not lines:
        return _clamp_speed(v_pref.x, v_pref.y, max_speed)
    rx, ry = kernels.solve_lines(lines_as_array(lines), fixed_count,
                                 v_pref.x, v_pref.y, max_speed)
    return Vec2(rx, ry)
