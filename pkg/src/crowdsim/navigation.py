"""Goal selection and plan computation.

Produces each pedestrian's preferred velocity either by following grid
paths (A* or the equivalent cached goal-field planner) or by descending a
potential field. Pure functions of immutable inputs; per-agent calls may
run in parallel within one tick.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from . import kernels
from .errors import NoPath, OccupiedEndpoint, OutOfBounds
from .geometry import ObstacleSet, OccupancyGrid, Vec2

SQRT2 = math.sqrt(2.0)

# Fixed expansion order shared with the field-descent kernel; keeps paths
# deterministic.
NEIGHBOR_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1),
                    (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class TargetProgress:
    """Position in a pedestrian's target sequence."""

    agent_id: int
    index: int = 0
    done: bool = False


@dataclass(frozen=True)
class Path:
    """Grid path of 8-connected cell centers, start first."""

    waypoints: tuple[Vec2, ...]
    cost: float


@dataclass(frozen=True)
class PotentialParams:
    k_att: float = 1.0
    k_rep: float = 0.5
    rho0: float = 2.0


def advance_goal(progress: TargetProgress, position: Vec2,
                 targets, cycle: bool = False) -> TargetProgress:
    """Advance one step through the target sequence when the current goal
    is reached; wraps when cycling, otherwise finishes after the last
    goal. Idempotent while the current goal is not reached."""
    if progress.done or not targets:
        if not targets and not progress.done:
            return TargetProgress(progress.agent_id, progress.index, True)
        return progress
    current = targets[progress.index]
    if not current.contains(position):
        return progress
    nxt = progress.index + 1
    if nxt >= len(targets):
        if cycle:
            return TargetProgress(progress.agent_id, 0, False)
        return TargetProgress(progress.agent_id, progress.index, True)
    return TargetProgress(progress.agent_id, nxt, False)


def _cell_or_raise(grid: OccupancyGrid, p: Vec2, what: str) -> tuple[int, int]:
    if not grid.in_bounds_point(p):
        raise OutOfBounds(f"{what} ({p.x}, {p.y}) outside the planning grid")
    ix, iy = grid.cell_of(p)
    if grid.is_occupied(ix, iy):
        raise OccupiedEndpoint(f"{what} ({p.x}, {p.y}) maps to an occupied cell")
    return ix, iy


def _diagonal_allowed(cells: np.ndarray, x: int, y: int, dx: int, dy: int) -> bool:
    # a diagonal squeezing between two mutually-adjacent occupied cells is
    # forbidden
    return not (cells[y, x + dx] and cells[y + dy, x])


def _step_cost_total(n_axial: int, n_diag: int, resolution: float) -> float:
    return n_axial * resolution + n_diag * (resolution * SQRT2)


def astar_plan(grid: OccupancyGrid, start: Vec2, goal: Vec2) -> Path:
    """Minimum-cost 8-connected grid path with the octile heuristic.

    Step costs are `resolution` for axial moves and `resolution*sqrt(2)`
    for diagonals. Ties on f are popped most-recently-inserted first with a
    final (x, y) lexicographic key, so the result is deterministic.
    """
    sx, sy = _cell_or_raise(grid, start, "start")
    gx, gy = _cell_or_raise(grid, goal, "goal")
    if (sx, sy) == (gx, gy):
        return Path((grid.center(sx, sy),), 0.0)

    res = grid.resolution
    cells = grid.cells

    def heuristic(x: int, y: int) -> float:
        dx = abs(x - gx)
        dy = abs(y - gy)
        lo = min(dx, dy)
        return res * (max(dx, dy) - lo) + (res * SQRT2) * lo

    g_axial: dict[tuple[int, int], tuple[int, int]] = {(sx, sy): (0, 0)}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    closed: set[tuple[int, int]] = set()
    counter = 0
    heap = [(heuristic(sx, sy), 0, sx, sy)]

    while heap:
        _, _, x, y = heapq.heappop(heap)
        if (x, y) in closed:
            continue
        if (x, y) == (gx, gy):
            cells_path = [(x, y)]
            while (x, y) in parent:
                x, y = parent[(x, y)]
                cells_path.append((x, y))
            cells_path.reverse()
            na, nd = g_axial[(gx, gy)]
            return Path(tuple(grid.center(cx, cy) for cx, cy in cells_path),
                        _step_cost_total(na, nd, res))
        closed.add((x, y))
        na, nd = g_axial[(x, y)]
        for dx, dy in NEIGHBOR_OFFSETS:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < grid.width and 0 <= ny < grid.height):
                continue
            if cells[ny, nx] or (nx, ny) in closed:
                continue
            diagonal = dx != 0 and dy != 0
            if diagonal and not _diagonal_allowed(cells, x, y, dx, dy):
                continue
            cand = (na + (0 if diagonal else 1), nd + (1 if diagonal else 0))
            cand_g = _step_cost_total(cand[0], cand[1], res)
            prev = g_axial.get((nx, ny))
            if prev is not None and _step_cost_total(prev[0], prev[1], res) <= cand_g:
                continue
            g_axial[(nx, ny)] = cand
            parent[(nx, ny)] = (x, y)
            counter += 1
            heapq.heappush(heap, (cand_g + heuristic(nx, ny), -counter, nx, ny))

    raise NoPath(f"no path from cell ({sx}, {sy}) to ({gx}, {gy})")


def preferred_velocity_astar(position: Vec2, path: Path, pref_speed: float,
                             lookahead: float = 1.0,
                             goal_tolerance: float = 0.2) -> Vec2:
    """Head toward the first waypoint at least `lookahead` ahead along the
    path (the final waypoint if none), at `pref_speed`; zero within
    `goal_tolerance` of the final waypoint."""
    if not path.waypoints:
        return Vec2(0.0, 0.0)
    wp = np.array([[w.x, w.y] for w in path.waypoints])
    pos = np.array([[position.x, position.y]])
    out, _ = kernels.follow_kernel(
        pos, np.zeros(1, np.int64), wp, np.array([0, len(wp)], np.int64),
        np.array([pref_speed]), np.array([goal_tolerance]), lookahead)
    return Vec2(out[0, 0], out[0, 1])


def potential_energy(position: Vec2, goal: Vec2, obstacles: ObstacleSet,
                     params: PotentialParams) -> float:
    """The scalar potential whose negative gradient drives the planner:
    quadratic attraction plus inverse-clearance repulsion inside rho0."""
    u = 0.5 * params.k_att * ((position.x - goal.x) ** 2 + (position.y - goal.y) ** 2)
    for seg in obstacles.segments:
        rho = seg.distance_to(position)
        if rho < params.rho0 and rho > 0.0:
            u += 0.5 * params.k_rep * (1.0 / rho - 1.0 / params.rho0) ** 2
    return u


def potential_gradient(position: Vec2, goal: Vec2, obstacles: ObstacleSet,
                       params: PotentialParams) -> Vec2:
    """Negative gradient of the potential, before speed clamping."""
    gx, gy, _ = kernels.pf_gradient(position.x, position.y, goal.x, goal.y,
                                    obstacles.as_array(), params.k_att,
                                    params.k_rep, params.rho0)
    return Vec2(gx, gy)


def potential_field_velocity(position: Vec2, goal: Vec2, obstacles: ObstacleSet,
                             params: PotentialParams, pref_speed: float) -> Vec2:
    """Negative potential gradient clamped to `pref_speed`; an agent
    touching a wall (clearance < 1e-6) gets pure repulsion at full speed."""
    out = kernels.pf_step_kernel(
        np.array([[position.x, position.y]]), np.zeros(1, np.int64),
        np.array([[goal.x, goal.y]]), np.array([pref_speed]),
        obstacles.as_array(), params.k_att, params.k_rep, params.rho0)
    return Vec2(out[0, 0], out[0, 1])


class GoalFieldPlanner:
    """Cached cost-to-goal fields over an occupancy grid.

    One Dijkstra sweep per distinct goal cell (C implementation via scipy)
    serves every agent heading there; extracted paths are cost-identical to
    `astar_plan` and deterministic.
    """

    def __init__(self, grid: OccupancyGrid):
        self.grid = grid
        self._occ = np.ascontiguousarray(grid.cells.astype(np.uint8))
        self._graph = None
        self._fields: dict[tuple[int, int], np.ndarray] = {}

    def _build_graph(self):
        occ = self.grid.cells
        h, w = occ.shape
        free = ~occ
        idx = np.arange(h * w).reshape(h, w)
        rows, cols, data = [], [], []

        def add(src_mask, dst_mask, src_idx, dst_idx, weight):
            m = src_mask & dst_mask
            rows.append(src_idx[m])
            cols.append(dst_idx[m])
            data.append(np.full(int(m.sum()), weight))

        res = self.grid.resolution
        # east
        add(free[:, :-1], free[:, 1:], idx[:, :-1], idx[:, 1:], res)
        # north
        add(free[:-1, :], free[1:, :], idx[:-1, :], idx[1:, :], res)
        # ne diagonal, blocked when both flanking cells are occupied
        ok = ~(occ[:-1, 1:] & occ[1:, :-1])
        add(free[:-1, :-1] & ok, free[1:, 1:], idx[:-1, :-1], idx[1:, 1:], res * SQRT2)
        # nw diagonal
        ok = ~(occ[:-1, :-1] & occ[1:, 1:])
        add(free[:-1, 1:] & ok, free[1:, :-1], idx[:-1, 1:], idx[1:, :-1], res * SQRT2)

        rows = np.concatenate(rows) if rows else np.zeros(0, int)
        cols = np.concatenate(cols) if cols else np.zeros(0, int)
        data = np.concatenate(data) if data else np.zeros(0)
        self._graph = csr_matrix((data, (rows, cols)), shape=(h * w, h * w))

    def field(self, goal_cell: tuple[int, int]) -> np.ndarray:
        cached = self._fields.get(goal_cell)
        if cached is not None:
            return cached
        if self._graph is None:
            self._build_graph()
        gx, gy = goal_cell
        node = gy * self.grid.width + gx
        f = dijkstra(self._graph, directed=False, indices=node)
        f = f.reshape(self.grid.height, self.grid.width)
        f.setflags(write=False)
        self._fields[goal_cell] = f
        return f

    def plan(self, start: Vec2, goal: Vec2) -> Path:
        sx, sy = _cell_or_raise(self.grid, start, "start")
        gx, gy = _cell_or_raise(self.grid, goal, "goal")
        f = self.field((gx, gy))
        if not np.isfinite(f[sy, sx]):
            raise NoPath(f"no path from cell ({sx}, {sy}) to ({gx}, {gy})")
        cells, ok = kernels.descend_kernel(self._occ, f, sx, sy,
                                           self.grid.resolution)
        if not ok:
            raise NoPath(f"field descent failed from cell ({sx}, {sy})")
        n_diag = int(np.sum((cells[1:, 0] != cells[:-1, 0])
                            & (cells[1:, 1] != cells[:-1, 1])))
        n_axial = cells.shape[0] - 1 - n_diag
        waypoints = tuple(self.grid.center(int(cx), int(cy)) for cx, cy in cells)
        return Path(waypoints, _step_cost_total(n_axial, n_diag, self.grid.resolution))
