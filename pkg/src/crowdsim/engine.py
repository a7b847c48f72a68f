"""The decision cycle: commands, goals, planning, avoidance, integration,
and simulated sensing.

The engine owns mutable state; `step` is the single mutation point and must
be called from one thread at a time. Within a step the avoidance/planning
kernels may fan out across worker threads (capped by CROWDSIM_THREADS,
0 = auto) with per-agent output slots, so trajectories are bit-identical
for any thread count. Snapshots and scans are immutable values.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .avoidance import OrcaParams, SocialForceParams
from .errors import NoPath, NotARobot, OccupiedEndpoint, OutOfBounds, UnknownRobot
from .geometry import Vec2, rasterize
from .navigation import GoalFieldPlanner, TargetProgress, advance_goal
from .scenario import (PEDESTRIAN, ROBOT, AStarParams, LaserConfig,
                       ScenarioSpec, validate_spec)

# an agent is replanned when it strays more than this many grid cells from
# its current path
STRAY_CELLS = 2.0


@dataclass(frozen=True)
class AgentState:
    """Kinematic state of one agent at a tick."""

    id: int
    kind: str
    position: Vec2
    heading: float
    velocity: Vec2
    radius: float
    pref_speed: float
    max_speed: float
    progress: TargetProgress | None = None


@dataclass(frozen=True)
class VelocityCommand:
    """External robot command; linear speed is clamped at application."""

    linear: float
    angular: float
    issued_tick: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.linear) and math.isfinite(self.angular)):
            raise ValueError("velocity command must be finite")


@dataclass(frozen=True)
class AgentPose:
    id: int
    kind: str
    x: float
    y: float
    theta: float
    vx: float
    vy: float


@dataclass(frozen=True)
class SimSnapshot:
    """Ground-truth poses of every agent at a tick (ascending id)."""

    tick: int
    sim_time: float
    agents: tuple[AgentPose, ...]


@dataclass(frozen=True)
class CycleStats:
    """Wall-clock milliseconds spent in each phase of one tick."""

    tick: int
    goal_ms: float
    plan_ms: float
    avoid_ms: float
    integrate_ms: float
    sense_ms: float
    total_ms: float


@dataclass(frozen=True)
class CollisionEvent:
    """Robot overlap, recorded but not physically resolved.

    `other_id` is an agent id, or a segment index when other_kind is
    "wall".
    """

    tick: int
    robot_id: int
    other_id: int
    depth: float
    other_kind: str = PEDESTRIAN


@dataclass(frozen=True)
class LaserScan:
    """One simulated range sweep; inf marks beams with no hit in range."""

    robot_id: int
    tick: int
    angle_min: float
    angle_increment: float
    max_range: float
    ranges: np.ndarray = field(compare=False)
    angles: np.ndarray = field(compare=False)


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(theta + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def configure_threads() -> int:
    """Apply the CROWDSIM_THREADS cap (0 or unset = auto); returns the
    thread count in effect."""
    raw = os.environ.get("CROWDSIM_THREADS", "0")
    try:
        requested = int(raw)
    except ValueError:
        requested = 0
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if requested <= 0 else min(requested, limit)
    numba.set_num_threads(n)
    return n


class Engine:
    """Simulation state machine for one scenario."""

    def __init__(self, spec: ScenarioSpec, validate: bool = True):
        if validate:
            validate_spec(spec)
        kernels.warmup()
        self.threads = configure_threads()
        self.spec = spec
        self.dt = spec.config.dt
        self.tick = 0
        self.collision_events: list[CollisionEvent] = []

        agents = sorted(spec.agents, key=lambda a: a.id)
        n = len(agents)
        self.ids = np.array([a.id for a in agents], np.int64)
        self.is_robot = np.array([a.kind == ROBOT for a in agents], np.uint8)
        self.pos = np.array([[a.start.x, a.start.y] for a in agents],
                            np.float64).reshape(n, 2)
        self.vel = np.zeros((n, 2), np.float64)
        self.heading = np.array([a.heading for a in agents], np.float64)
        self.radius = np.array([a.radius for a in agents], np.float64)
        self.pref_speed = np.array([a.pref_speed for a in agents], np.float64)
        self.max_speed = np.array([a.max_speed for a in agents], np.float64)
        self._row_of = {a.id: i for i, a in enumerate(agents)}
        self._specs = agents

        self.ped_rows = np.array([i for i, a in enumerate(agents)
                                  if a.kind == PEDESTRIAN], np.int64)
        self.robot_rows = np.array([i for i, a in enumerate(agents)
                                    if a.kind == ROBOT], np.int64)
        self._segs = spec.obstacles.as_array()

        # zero-order hold of the latest command per robot
        self.cmd_linear = np.zeros(n, np.float64)
        self.cmd_angular = np.zeros(n, np.float64)

        # pedestrian goal progress
        self._targets = [a.targets for a in agents]
        self._cycle = [a.cycle_targets for a in agents]
        self.progress_index = np.zeros(n, np.int64)
        self.progress_done = np.array([a.kind == PEDESTRIAN and not a.targets
                                       for a in agents], bool)

        # planning state
        self._paths: list[np.ndarray | None] = [None] * n
        self._needs_plan = np.array([a.kind == PEDESTRIAN and bool(a.targets)
                                     for a in agents], bool)
        self._planners: dict[float, GoalFieldPlanner] = {}
        if spec.config.planner == "astar":
            params: AStarParams = spec.config.planner_params
            inflations = ({params.inflation} if params.inflation is not None
                          else {a.radius for a in agents if a.kind == PEDESTRIAN})
            for inf_val in sorted(inflations):
                grid = rasterize(spec.obstacles, params.resolution, inf_val,
                                 bounds=spec.world_bounds)
                self._planners[inf_val] = GoalFieldPlanner(grid)

        self._scan_cache: dict[int, LaserScan] = {}
        self._default_angles = self._angles_for(spec.config.laser)

    # -- helpers ----------------------------------------------------------

    @staticmethod
    def _angles_for(cfg: LaserConfig) -> np.ndarray:
        # linspace pins both edge beams to exactly +-fov/2
        return np.linspace(-cfg.fov / 2.0, cfg.fov / 2.0, cfg.beam_count)

    def _planner_for(self, row: int) -> GoalFieldPlanner:
        params: AStarParams = self.spec.config.planner_params
        key = params.inflation if params.inflation is not None else self.radius[row]
        return self._planners[key]

    def robot_row(self, robot_id: int) -> int:
        row = self._row_of.get(robot_id)
        if row is None:
            raise UnknownRobot(f"no agent with id {robot_id}")
        if not self.is_robot[row]:
            raise NotARobot(f"agent {robot_id} is a pedestrian")
        return row

    def robot_ids(self) -> list[int]:
        return [int(self.ids[r]) for r in self.robot_rows]

    def agent_state(self, agent_id: int) -> AgentState:
        row = self._row_of[agent_id]
        progress = None
        if not self.is_robot[row]:
            progress = TargetProgress(agent_id, int(self.progress_index[row]),
                                      bool(self.progress_done[row]))
        return AgentState(
            id=agent_id,
            kind=ROBOT if self.is_robot[row] else PEDESTRIAN,
            position=Vec2(self.pos[row, 0], self.pos[row, 1]),
            heading=float(self.heading[row]),
            velocity=Vec2(self.vel[row, 0], self.vel[row, 1]),
            radius=float(self.radius[row]),
            pref_speed=float(self.pref_speed[row]),
            max_speed=float(self.max_speed[row]),
            progress=progress)

    def _current_goal(self, row: int):
        if self.progress_done[row] or not self._targets[row]:
            return None
        return self._targets[row][int(self.progress_index[row])]

    # -- phases ------------------------------------------------------------

    def _apply_commands(self, commands):
        if commands:
            for rid in sorted(commands):
                row = self.robot_row(int(rid))
                cmd = commands[rid]
                lin, ang = (cmd.linear, cmd.angular) if isinstance(cmd, VelocityCommand) \
                    else (float(cmd[0]), float(cmd[1]))
                if not (math.isfinite(lin) and math.isfinite(ang)):
                    raise ValueError("velocity command must be finite")
                self.cmd_linear[row] = lin
                self.cmd_angular[row] = ang
        for row in self.robot_rows:
            lin = self.cmd_linear[row]
            cap = self.max_speed[row]
            lin = max(-cap, min(cap, lin))
            self.vel[row, 0] = lin * math.cos(self.heading[row])
            self.vel[row, 1] = lin * math.sin(self.heading[row])

    def _advance_goals(self):
        for row in self.ped_rows:
            if self.progress_done[row] or not self._targets[row]:
                continue
            progress = TargetProgress(int(self.ids[row]),
                                      int(self.progress_index[row]), False)
            out = advance_goal(progress, Vec2(self.pos[row, 0], self.pos[row, 1]),
                               self._targets[row], cycle=self._cycle[row])
            if out is not progress:
                if out.index != progress.index or out.done != progress.done:
                    self.progress_index[row] = out.index
                    self.progress_done[row] = out.done
                    self._needs_plan[row] = not out.done

    def _replan(self, row: int):
        goal = self._current_goal(row)
        if goal is None:
            self._paths[row] = None
            return
        planner = self._planner_for(row)
        start = Vec2(self.pos[row, 0], self.pos[row, 1])
        target = goal.target_point
        try:
            path = planner.plan(start, target)
        except (NoPath, OutOfBounds, OccupiedEndpoint):
            # keep any previous path; otherwise the agent waits in place
            return
        wp = np.array([[w.x, w.y] for w in path.waypoints], np.float64)
        # pursue the exact goal point rather than the goal cell center
        wp[-1, 0] = target.x
        wp[-1, 1] = target.y
        self._paths[row] = wp

    def _goal_tolerances(self) -> np.ndarray:
        tol = np.zeros(len(self.ped_rows), np.float64)
        for k, row in enumerate(self.ped_rows):
            goal = self._current_goal(row)
            tol[k] = getattr(goal, "tolerance", 0.0) if goal is not None else 0.0
        return tol

    def _follow_arrays(self):
        counts = [0 if self._paths[row] is None else len(self._paths[row])
                  for row in self.ped_rows]
        off = np.zeros(len(counts) + 1, np.int64)
        np.cumsum(counts, out=off[1:])
        flat = np.zeros((int(off[-1]), 2), np.float64)
        for k, row in enumerate(self.ped_rows):
            if counts[k]:
                flat[off[k]:off[k + 1]] = self._paths[row]
        return flat, off

    def _plan_preferred(self) -> np.ndarray:
        cfg = self.spec.config
        if len(self.ped_rows) == 0:
            return np.zeros((0, 2), np.float64)
        if cfg.planner == "astar":
            params: AStarParams = cfg.planner_params
            for row in self.ped_rows:
                if self._needs_plan[row]:
                    self._replan(row)
                    self._needs_plan[row] = False
            tol = self._goal_tolerances()
            flat, off = self._follow_arrays()
            pref, stray = kernels.follow_kernel(
                self.pos, self.ped_rows, flat, off,
                self.pref_speed[self.ped_rows], tol, params.lookahead)
            strayed = stray > STRAY_CELLS * params.resolution
            if strayed.any():
                for k in np.nonzero(strayed)[0]:
                    self._replan(int(self.ped_rows[k]))
                flat, off = self._follow_arrays()
                pref, _ = kernels.follow_kernel(
                    self.pos, self.ped_rows, flat, off,
                    self.pref_speed[self.ped_rows], tol, params.lookahead)
            return pref
        # potential field: active pedestrians descend toward the current
        # target point, finished ones stand still
        pref = np.zeros((len(self.ped_rows), 2), np.float64)
        active, goals = [], []
        for k, row in enumerate(self.ped_rows):
            goal = self._current_goal(row)
            if goal is not None:
                active.append(k)
                goals.append([goal.target_point.x, goal.target_point.y])
        if active:
            rows = self.ped_rows[np.array(active, np.int64)]
            out = kernels.pf_step_kernel(
                self.pos, rows, np.array(goals, np.float64),
                self.pref_speed[rows], self._segs,
                cfg.planner_params.k_att, cfg.planner_params.k_rep,
                cfg.planner_params.rho0)
            pref[np.array(active, np.int64)] = out
        return pref

    def _avoid(self, pref: np.ndarray):
        if len(self.ped_rows) == 0:
            return
        cfg = self.spec.config
        n = len(self.ids)
        tree = cKDTree(self.pos)
        if cfg.avoidance == "orca":
            params: OrcaParams = cfg.avoidance_params
            k = min(params.max_neighbors + 1, n)
            dists, idxs = tree.query(self.pos[self.ped_rows], k=k, workers=1)
            dists = np.atleast_2d(np.asarray(dists, np.float64))
            idxs = np.atleast_2d(np.asarray(idxs, np.int64))
            if dists.shape[0] != len(self.ped_rows):
                dists = dists.reshape(len(self.ped_rows), -1)
                idxs = idxs.reshape(len(self.ped_rows), -1)
            nbr, nbr_n = kernels.select_neighbors(
                dists, idxs, self.ped_rows, self.ids,
                params.neighbor_dist, params.max_neighbors)
            newv = kernels.orca_step_kernel(
                self.pos, self.vel, self.radius, self.max_speed, self.ids,
                self.ped_rows, pref, nbr, nbr_n, self._segs,
                params.time_horizon, params.time_horizon_obst, self.dt)
        else:
            params: SocialForceParams = cfg.avoidance_params
            balls = tree.query_ball_point(self.pos[self.ped_rows],
                                          params.neighbor_dist, workers=1)
            flat, off = [], [0]
            for k_row, row in enumerate(self.ped_rows):
                nbrs = sorted(int(j) for j in balls[k_row] if j != row)
                flat.extend(nbrs)
                off.append(len(flat))
            newv = kernels.sf_step_kernel(
                self.pos, self.vel, self.radius, self.max_speed, self.ids,
                self.is_robot, self.ped_rows, pref,
                np.array(flat, np.int64), np.array(off, np.int64), self._segs,
                params.tau, params.A, params.B, params.wall_A, params.wall_B,
                params.robot_factor, params.neighbor_dist, self.dt)
        self.vel[self.ped_rows] = newv

    def _integrate(self):
        dt = self.dt
        peds = self.ped_rows
        if len(peds):
            self.pos[peds] += self.vel[peds] * dt
            speeds = np.hypot(self.vel[peds, 0], self.vel[peds, 1])
            moving = peds[speeds > 1e-12]
            self.heading[moving] = np.arctan2(self.vel[moving, 1],
                                              self.vel[moving, 0])
        for row in self.robot_rows:
            cap = self.max_speed[row]
            lin = max(-cap, min(cap, self.cmd_linear[row]))
            self.pos[row, 0] += lin * math.cos(self.heading[row]) * dt
            self.pos[row, 1] += lin * math.sin(self.heading[row]) * dt
            self.heading[row] = wrap_angle(self.heading[row]
                                           + self.cmd_angular[row] * dt)
        self.tick += 1
        # robot overlaps are logged, never corrected
        for row in self.robot_rows:
            d = np.hypot(self.pos[:, 0] - self.pos[row, 0],
                         self.pos[:, 1] - self.pos[row, 1])
            r_sum = self.radius + self.radius[row]
            hit = np.nonzero((d < r_sum) & (np.arange(len(d)) != row))[0]
            for other in hit:
                if self.is_robot[other] and other < row:
                    continue  # robot pair already recorded from the lower row
                self.collision_events.append(CollisionEvent(
                    self.tick, int(self.ids[row]), int(self.ids[other]),
                    float(r_sum[other] - d[other]),
                    ROBOT if self.is_robot[other] else PEDESTRIAN))
            p = Vec2(self.pos[row, 0], self.pos[row, 1])
            for s, seg in enumerate(self.spec.obstacles.segments):
                clearance = seg.distance_to(p)
                if clearance < self.radius[row]:
                    self.collision_events.append(CollisionEvent(
                        self.tick, int(self.ids[row]), s,
                        float(self.radius[row] - clearance), "wall"))

    def step(self, commands=None, scan_robots=()) -> tuple[CycleStats, dict[int, LaserScan]]:
        """Advance one tick; returns per-phase timings and any requested scans.

        `commands` maps robot id to a VelocityCommand (or (linear, angular));
        the latest command per robot stays in effect until replaced.
        """
        t0 = time.perf_counter()
        self._apply_commands(commands)
        self._scan_cache.clear()
        t1 = time.perf_counter()
        self._advance_goals()
        t2 = time.perf_counter()
        pref = self._plan_preferred()
        t3 = time.perf_counter()
        self._avoid(pref)
        t4 = time.perf_counter()
        self._integrate()
        t5 = time.perf_counter()
        scans = {}
        for rid in sorted(int(r) for r in scan_robots):
            scans[rid] = self.simulate_scan(rid)
        t6 = time.perf_counter()
        stats = CycleStats(
            tick=self.tick,
            goal_ms=(t2 - t1) * 1e3,
            plan_ms=(t3 - t2) * 1e3,
            avoid_ms=(t4 - t3) * 1e3,
            integrate_ms=(t5 - t4) * 1e3,
            sense_ms=(t6 - t5) * 1e3,
            total_ms=(t6 - t0) * 1e3)
        return stats, scans

    # -- sensing and snapshots ----------------------------------------------

    def simulate_scan(self, robot_id: int, config: LaserConfig | None = None) -> LaserScan:
        """Noise-free range scan against walls and all other agents."""
        row = self.robot_row(int(robot_id))
        default = config is None
        if default and robot_id in self._scan_cache:
            return self._scan_cache[robot_id]
        cfg = self.spec.config.laser if default else config
        angles = self._default_angles if default else self._angles_for(cfg)
        theta = self.heading[row]
        mx, my = cfg.mount_offset.x, cfg.mount_offset.y
        ox = self.pos[row, 0] + mx * math.cos(theta) - my * math.sin(theta)
        oy = self.pos[row, 1] + mx * math.sin(theta) + my * math.cos(theta)
        mask = np.arange(len(self.ids)) != row
        ranges = kernels.scan_kernel(ox, oy, theta, angles, cfg.max_range,
                                     self._segs,
                                     np.ascontiguousarray(self.pos[mask]),
                                     np.ascontiguousarray(self.radius[mask]))
        ranges.setflags(write=False)
        scan = LaserScan(robot_id=int(robot_id), tick=self.tick,
                         angle_min=float(angles[0]),
                         angle_increment=cfg.fov / (cfg.beam_count - 1),
                         max_range=cfg.max_range, ranges=ranges, angles=angles)
        if default:
            self._scan_cache[robot_id] = scan
        return scan

    def snapshot(self) -> SimSnapshot:
        poses = tuple(
            AgentPose(id=int(self.ids[i]),
                      kind=ROBOT if self.is_robot[i] else PEDESTRIAN,
                      x=float(self.pos[i, 0]), y=float(self.pos[i, 1]),
                      theta=float(self.heading[i]),
                      vx=float(self.vel[i, 0]), vy=float(self.vel[i, 1]))
            for i in range(len(self.ids)))
        return SimSnapshot(tick=self.tick, sim_time=self.tick * self.dt,
                           agents=poses)


def snapshot_log_line(snap: SimSnapshot) -> str:
    """One trajectory-log line: compact JSON with shortest-round-trip floats."""
    doc = {"tick": snap.tick, "t": snap.sim_time,
           "agents": [[a.id, a.kind, a.x, a.y, a.theta, a.vx, a.vy]
                      for a in snap.agents]}
    return json.dumps(doc, separators=(",", ":"))


class TrajectoryRecorder:
    """Writes one JSON line per tick, starting with the initial state."""

    def __init__(self, path: str, engine: Engine):
        # line-buffered so an interrupted server still leaves whole lines
        self._fh = open(path, "w", encoding="utf-8", buffering=1)
        self._engine = engine
        self.record()

    def record(self):
        self._fh.write(snapshot_log_line(self._engine.snapshot()) + "\n")

    def close(self):
        self._fh.flush()
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
