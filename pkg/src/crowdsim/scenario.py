"""Scenario files: parse, validate, serialize.

The on-disk format is a single JSON document:

    {
      "name": str,
      "bounds": [xmin, ymin, xmax, ymax],
      "obstacles": [[x1, y1, x2, y2], ...],
      "agents": [{"id", "kind", "x", "y", "heading"?, "radius"?,
                  "pref_speed"?, "max_speed"?, "targets"?, "cycle"?}, ...],
      "config": {"dt"?, "planner"?, "avoidance"?, "planner_params"?,
                 "avoidance_params"?, "seed"?, "laser"?}
    }

Targets are {"type": "point", "x", "y", "tol"?} or
{"type": "region", "x", "y", "hx", "hy"}. Unknown keys anywhere are
rejected. `parse_scenario(serialize_scenario(spec)) == spec` holds for any
valid spec, and serialization is byte-identical for equal specs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Union

import numpy as np
from scipy.spatial import cKDTree

from .avoidance import OrcaParams, SocialForceParams
from .errors import ScenarioSyntaxError, ValidationError
from .geometry import ObstacleSet, Rect, Segment, Vec2
from .navigation import PotentialParams

PEDESTRIAN = "pedestrian"
ROBOT = "robot"

PLANNER_ASTAR = "astar"
PLANNER_POTENTIAL = "potential_field"
AVOIDANCE_ORCA = "orca"
AVOIDANCE_SOCIAL_FORCE = "social_force"

DEFAULT_DT = 0.1
DEFAULT_POINT_TOLERANCE = 0.2
DEFAULT_RADIUS = 0.25
DEFAULT_PREF_SPEED = 1.3
DEFAULT_MAX_SPEED = 2.0
OVERLAP_SLACK = 1e-9


@dataclass(frozen=True)
class PointGoal:
    pos: Vec2
    tolerance: float = DEFAULT_POINT_TOLERANCE

    def contains(self, p: Vec2) -> bool:
        return p.distance_to(self.pos) <= self.tolerance

    @property
    def target_point(self) -> Vec2:
        return self.pos


@dataclass(frozen=True)
class RegionGoal:
    center: Vec2
    half_extents: Vec2

    def contains(self, p: Vec2) -> bool:
        return (abs(p.x - self.center.x) <= self.half_extents.x
                and abs(p.y - self.center.y) <= self.half_extents.y)

    @property
    def target_point(self) -> Vec2:
        return self.center


GoalSpec = Union[PointGoal, RegionGoal]


@dataclass(frozen=True)
class AgentSpec:
    id: int
    kind: str
    start: Vec2
    heading: float = 0.0
    radius: float = DEFAULT_RADIUS
    pref_speed: float = DEFAULT_PREF_SPEED
    max_speed: float = DEFAULT_MAX_SPEED
    targets: tuple[GoalSpec, ...] = ()
    cycle_targets: bool = False


@dataclass(frozen=True)
class AStarParams:
    """Grid-planner tunables; inflation None means each agent's radius."""

    resolution: float = 0.25
    inflation: float | None = None
    lookahead: float = 1.0


@dataclass(frozen=True)
class LaserConfig:
    fov: float = math.radians(220.0)
    max_range: float = 25.0
    beam_count: int = 440
    rate_divisor: int = 1
    mount_offset: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))


@dataclass(frozen=True)
class SimConfig:
    dt: float = DEFAULT_DT
    planner: str = PLANNER_ASTAR
    avoidance: str = AVOIDANCE_ORCA
    planner_params: AStarParams | PotentialParams = field(default_factory=AStarParams)
    avoidance_params: OrcaParams | SocialForceParams = field(default_factory=OrcaParams)
    laser: LaserConfig = field(default_factory=LaserConfig)
    seed: int = 0


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    world_bounds: Rect
    obstacles: ObstacleSet
    agents: tuple[AgentSpec, ...]
    config: SimConfig = field(default_factory=SimConfig)

    def robots(self) -> tuple[AgentSpec, ...]:
        return tuple(a for a in self.agents if a.kind == ROBOT)

    def pedestrians(self) -> tuple[AgentSpec, ...]:
        return tuple(a for a in self.agents if a.kind == PEDESTRIAN)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ValidationError(where + key if where.endswith(".") or not where else key,
                              "missing required key")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], where: str):
    for k in obj:
        if k not in allowed:
            raise ValidationError(f"{where}{k}" if where else k, "unknown key")


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(where, f"expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise ValidationError(where, "number must be finite")
    return v


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(where, f"expected an integer, got {type(value).__name__}")
    return value


def _parse_target(obj: Any, where: str) -> GoalSpec:
    if not isinstance(obj, dict):
        raise ValidationError(where, "target must be an object")
    kind = _require(obj, "type", where + ".")
    if kind == "point":
        _check_keys(obj, {"type", "x", "y", "tol"}, where + ".")
        pos = Vec2(_num(_require(obj, "x", where + "."), where + ".x"),
                   _num(_require(obj, "y", where + "."), where + ".y"))
        tol = _num(obj.get("tol", DEFAULT_POINT_TOLERANCE), where + ".tol")
        if tol <= 0.0:
            raise ValidationError(where + ".tol", "tolerance must be positive")
        return PointGoal(pos, tol)
    if kind == "region":
        _check_keys(obj, {"type", "x", "y", "hx", "hy"}, where + ".")
        center = Vec2(_num(_require(obj, "x", where + "."), where + ".x"),
                      _num(_require(obj, "y", where + "."), where + ".y"))
        hx = _num(_require(obj, "hx", where + "."), where + ".hx")
        hy = _num(_require(obj, "hy", where + "."), where + ".hy")
        if hx <= 0.0 or hy <= 0.0:
            raise ValidationError(where, "half extents must be positive")
        return RegionGoal(center, Vec2(hx, hy))
    raise ValidationError(where + ".type", f"unknown target type {kind!r}")


def _parse_agent(obj: Any, where: str) -> AgentSpec:
    if not isinstance(obj, dict):
        raise ValidationError(where, "agent must be an object")
    _check_keys(obj, {"id", "kind", "x", "y", "heading", "radius",
                      "pref_speed", "max_speed", "targets", "cycle"}, where + ".")
    agent_id = _int(_require(obj, "id", where + "."), where + ".id")
    if agent_id < 0:
        raise ValidationError(where + ".id", "id must be non-negative")
    kind = _require(obj, "kind", where + ".")
    if kind not in (PEDESTRIAN, ROBOT):
        raise ValidationError(where + ".kind", f"unknown kind {kind!r}")
    start = Vec2(_num(_require(obj, "x", where + "."), where + ".x"),
                 _num(_require(obj, "y", where + "."), where + ".y"))
    heading = _num(obj.get("heading", 0.0), where + ".heading")
    if kind == PEDESTRIAN and "heading" in obj:
        raise ValidationError(where + ".heading", "only robots take a heading")
    radius = _num(obj.get("radius", DEFAULT_RADIUS), where + ".radius")
    if radius <= 0.0:
        raise ValidationError(where + ".radius", "radius must be positive")
    pref_speed = _num(obj.get("pref_speed", DEFAULT_PREF_SPEED), where + ".pref_speed")
    max_speed = _num(obj.get("max_speed", DEFAULT_MAX_SPEED), where + ".max_speed")
    if pref_speed < 0.0:
        raise ValidationError(where + ".pref_speed", "pref_speed must be >= 0")
    if max_speed < pref_speed:
        raise ValidationError(where + ".max_speed", "max_speed must be >= pref_speed")
    targets: tuple[GoalSpec, ...] = ()
    if kind == PEDESTRIAN and "targets" in obj:
        raw = obj["targets"]
        if not isinstance(raw, list):
            raise ValidationError(where + ".targets", "targets must be a list")
        targets = tuple(_parse_target(t, f"{where}.targets[{i}]")
                        for i, t in enumerate(raw))
    # robots execute external commands; any targets in the file are ignored
    cycle = obj.get("cycle", False)
    if not isinstance(cycle, bool):
        raise ValidationError(where + ".cycle", "cycle must be a boolean")
    if kind == ROBOT:
        cycle = False
    return AgentSpec(id=agent_id, kind=kind, start=start, heading=heading,
                     radius=radius, pref_speed=pref_speed, max_speed=max_speed,
                     targets=targets, cycle_targets=cycle)


_ASTAR_KEYS = {"resolution", "inflation", "lookahead"}
_POTENTIAL_KEYS = {"k_att", "k_rep", "rho0"}
_ORCA_KEYS = {"time_horizon", "time_horizon_obst", "neighbor_dist", "max_neighbors"}
_SF_KEYS = {"tau", "A", "B", "wall_A", "wall_B", "neighbor_dist", "robot_factor"}


def _parse_planner_params(planner: str, obj: Any) -> AStarParams | PotentialParams:
    where = "config.planner_params"
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise ValidationError(where, "planner_params must be an object")
    if planner == PLANNER_ASTAR:
        _check_keys(obj, _ASTAR_KEYS, where + ".")
        resolution = _num(obj.get("resolution", 0.25), where + ".resolution")
        if resolution <= 0.0:
            raise ValidationError(where + ".resolution", "resolution must be positive")
        inflation = obj.get("inflation")
        if inflation is not None:
            inflation = _num(inflation, where + ".inflation")
            if inflation < 0.0:
                raise ValidationError(where + ".inflation", "inflation must be >= 0")
        lookahead = _num(obj.get("lookahead", 1.0), where + ".lookahead")
        if lookahead <= 0.0:
            raise ValidationError(where + ".lookahead", "lookahead must be positive")
        return AStarParams(resolution, inflation, lookahead)
    _check_keys(obj, _POTENTIAL_KEYS, where + ".")
    params = PotentialParams(
        k_att=_num(obj.get("k_att", 1.0), where + ".k_att"),
        k_rep=_num(obj.get("k_rep", 0.5), where + ".k_rep"),
        rho0=_num(obj.get("rho0", 2.0), where + ".rho0"))
    if params.k_att <= 0.0 or params.k_rep <= 0.0 or params.rho0 <= 0.0:
        raise ValidationError(where, "potential-field gains must be positive")
    return params


def _parse_avoidance_params(avoidance: str, obj: Any) -> OrcaParams | SocialForceParams:
    where = "config.avoidance_params"
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise ValidationError(where, "avoidance_params must be an object")
    if avoidance == AVOIDANCE_ORCA:
        _check_keys(obj, _ORCA_KEYS, where + ".")
        params = OrcaParams(
            time_horizon=_num(obj.get("time_horizon", 2.0), where + ".time_horizon"),
            time_horizon_obst=_num(obj.get("time_horizon_obst", 2.0),
                                   where + ".time_horizon_obst"),
            neighbor_dist=_num(obj.get("neighbor_dist", 10.0), where + ".neighbor_dist"),
            max_neighbors=_int(obj.get("max_neighbors", 10), where + ".max_neighbors"))
        if (params.time_horizon <= 0.0 or params.time_horizon_obst <= 0.0
                or params.neighbor_dist <= 0.0):
            raise ValidationError(where, "horizons and neighbor_dist must be positive")
        if params.max_neighbors < 1:
            raise ValidationError(where + ".max_neighbors", "max_neighbors must be >= 1")
        return params
    _check_keys(obj, _SF_KEYS, where + ".")
    params = SocialForceParams(
        tau=_num(obj.get("tau", 0.5), where + ".tau"),
        A=_num(obj.get("A", 2.0), where + ".A"),
        B=_num(obj.get("B", 0.08), where + ".B"),
        wall_A=_num(obj.get("wall_A", 4.0), where + ".wall_A"),
        wall_B=_num(obj.get("wall_B", 0.06), where + ".wall_B"),
        neighbor_dist=_num(obj.get("neighbor_dist", 5.0), where + ".neighbor_dist"),
        robot_factor=_num(obj.get("robot_factor", 1.0), where + ".robot_factor"))
    for name in ("tau", "A", "B", "wall_A", "wall_B", "neighbor_dist", "robot_factor"):
        if getattr(params, name) <= 0.0:
            raise ValidationError(f"{where}.{name}", "must be positive")
    return params


def _parse_laser(obj: Any) -> LaserConfig:
    where = "config.laser"
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise ValidationError(where, "laser must be an object")
    _check_keys(obj, {"fov", "max_range", "beam_count", "rate_divisor",
                      "mount_x", "mount_y"}, where + ".")
    fov = _num(obj.get("fov", math.radians(220.0)), where + ".fov")
    if not 0.0 < fov <= 2.0 * math.pi:
        raise ValidationError(where + ".fov", "fov must be in (0, 2*pi] radians")
    max_range = _num(obj.get("max_range", 25.0), where + ".max_range")
    if max_range <= 0.0:
        raise ValidationError(where + ".max_range", "max_range must be positive")
    beam_count = _int(obj.get("beam_count", 440), where + ".beam_count")
    if beam_count < 2:
        raise ValidationError(where + ".beam_count", "beam_count must be >= 2")
    rate_divisor = _int(obj.get("rate_divisor", 1), where + ".rate_divisor")
    if rate_divisor < 1:
        raise ValidationError(where + ".rate_divisor", "rate_divisor must be >= 1")
    mount = Vec2(_num(obj.get("mount_x", 0.0), where + ".mount_x"),
                 _num(obj.get("mount_y", 0.0), where + ".mount_y"))
    return LaserConfig(fov, max_range, beam_count, rate_divisor, mount)


def _parse_config(obj: Any) -> SimConfig:
    where = "config"
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise ValidationError(where, "config must be an object")
    _check_keys(obj, {"dt", "planner", "avoidance", "planner_params",
                      "avoidance_params", "seed", "laser"}, where + ".")
    dt = _num(obj.get("dt", DEFAULT_DT), where + ".dt")
    if not 0.0 < dt <= 1.0:
        raise ValidationError(where + ".dt", "dt must be in (0, 1] seconds")
    planner = obj.get("planner", PLANNER_ASTAR)
    if planner not in (PLANNER_ASTAR, PLANNER_POTENTIAL):
        raise ValidationError(where + ".planner", f"unknown planner {planner!r}")
    avoidance = obj.get("avoidance", AVOIDANCE_ORCA)
    if avoidance not in (AVOIDANCE_ORCA, AVOIDANCE_SOCIAL_FORCE):
        raise ValidationError(where + ".avoidance", f"unknown avoidance {avoidance!r}")
    seed = _int(obj.get("seed", 0), where + ".seed")
    if not -(2**63) <= seed < 2**64:
        raise ValidationError(where + ".seed", "seed must fit in 64 bits")
    return SimConfig(
        dt=dt, planner=planner, avoidance=avoidance,
        planner_params=_parse_planner_params(planner, obj.get("planner_params")),
        avoidance_params=_parse_avoidance_params(avoidance, obj.get("avoidance_params")),
        laser=_parse_laser(obj.get("laser")),
        seed=seed)


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and fully validate a scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.lineno, exc.msg) from exc
    if not isinstance(doc, dict):
        raise ValidationError("$", "top level must be a JSON object")
    _check_keys(doc, {"name", "bounds", "obstacles", "agents", "config"}, "")

    name = doc.get("name", "unnamed")
    if not isinstance(name, str):
        raise ValidationError("name", "name must be a string")

    raw_bounds = _require(doc, "bounds", "")
    if not (isinstance(raw_bounds, list) and len(raw_bounds) == 4):
        raise ValidationError("bounds", "bounds must be [xmin, ymin, xmax, ymax]")
    bounds = Rect(*(_num(v, f"bounds[{i}]") for i, v in enumerate(raw_bounds)))
    if bounds.is_degenerate():
        raise ValidationError("bounds", "bounds must have positive area")

    raw_obstacles = doc.get("obstacles", [])
    if not isinstance(raw_obstacles, list):
        raise ValidationError("obstacles", "obstacles must be a list")
    segments = []
    for i, quad in enumerate(raw_obstacles):
        w = f"obstacles[{i}]"
        if not (isinstance(quad, list) and len(quad) == 4):
            raise ValidationError(w, "segment must be [x1, y1, x2, y2]")
        x1, y1, x2, y2 = (_num(v, f"{w}[{j}]") for j, v in enumerate(quad))
        if (x1, y1) == (x2, y2):
            raise ValidationError(w, "segment endpoints must differ")
        segments.append(Segment(Vec2(x1, y1), Vec2(x2, y2)))

    raw_agents = _require(doc, "agents", "")
    if not isinstance(raw_agents, list):
        raise ValidationError("agents", "agents must be a list")
    agents = tuple(_parse_agent(a, f"agents[{i}]") for i, a in enumerate(raw_agents))

    spec = ScenarioSpec(name=name, world_bounds=bounds,
                        obstacles=ObstacleSet.from_segments(segments),
                        agents=agents, config=_parse_config(doc.get("config")))
    validate_spec(spec)
    return spec


def validate_spec(spec: ScenarioSpec):
    """Semantic validation shared by the parser and the engine."""
    seen: dict[int, int] = {}
    for i, a in enumerate(spec.agents):
        w = f"agents[{i}]"
        if a.id in seen:
            raise ValidationError(f"{w}.id", f"duplicate id {a.id}")
        seen[a.id] = i
        if not spec.world_bounds.contains(a.start):
            raise ValidationError(f"{w}", f"start ({a.start.x}, {a.start.y}) "
                                  "outside world bounds")
        for seg in spec.obstacles.segments:
            if seg.distance_to(a.start) < a.radius - OVERLAP_SLACK:
                raise ValidationError(f"{w}", "start is inside an obstacle "
                                      "(after radius inflation)")
    for i, seg in enumerate(spec.obstacles.segments):
        if not (spec.world_bounds.contains(seg.a) and spec.world_bounds.contains(seg.b)):
            raise ValidationError(f"obstacles[{i}]", "segment endpoint outside "
                                  "world bounds")
    n = len(spec.agents)
    if n >= 2:
        pos = np.array([[a.start.x, a.start.y] for a in spec.agents])
        radii = np.array([a.radius for a in spec.agents])
        tree = cKDTree(pos)
        for i, j in tree.query_pairs(2.0 * float(radii.max())):
            d = math.hypot(pos[i, 0] - pos[j, 0], pos[i, 1] - pos[j, 1])
            if d < radii[i] + radii[j] - OVERLAP_SLACK:
                raise ValidationError(
                    f"agents[{j}]",
                    f"agents {spec.agents[i].id} and {spec.agents[j].id} "
                    "overlap at start")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _target_doc(goal: GoalSpec) -> dict:
    if isinstance(goal, PointGoal):
        return {"type": "point", "x": goal.pos.x, "y": goal.pos.y,
                "tol": goal.tolerance}
    return {"type": "region", "x": goal.center.x, "y": goal.center.y,
            "hx": goal.half_extents.x, "hy": goal.half_extents.y}


def _agent_doc(a: AgentSpec) -> dict:
    doc: dict[str, Any] = {"id": a.id, "kind": a.kind, "x": a.start.x, "y": a.start.y}
    if a.kind == ROBOT:
        doc["heading"] = a.heading
    doc["radius"] = a.radius
    doc["pref_speed"] = a.pref_speed
    doc["max_speed"] = a.max_speed
    if a.kind == PEDESTRIAN:
        doc["targets"] = [_target_doc(t) for t in a.targets]
        doc["cycle"] = a.cycle_targets
    return doc


def _params_doc(params: AStarParams | PotentialParams | OrcaParams | SocialForceParams) -> dict:
    if isinstance(params, AStarParams):
        return {"resolution": params.resolution, "inflation": params.inflation,
                "lookahead": params.lookahead}
    if isinstance(params, PotentialParams):
        return {"k_att": params.k_att, "k_rep": params.k_rep, "rho0": params.rho0}
    if isinstance(params, OrcaParams):
        return {"time_horizon": params.time_horizon,
                "time_horizon_obst": params.time_horizon_obst,
                "neighbor_dist": params.neighbor_dist,
                "max_neighbors": params.max_neighbors}
    return {"tau": params.tau, "A": params.A, "B": params.B,
            "wall_A": params.wall_A, "wall_B": params.wall_B,
            "neighbor_dist": params.neighbor_dist,
            "robot_factor": params.robot_factor}


def serialize_scenario(spec: ScenarioSpec) -> str:
    """Canonical UTF-8 document; byte-identical for equal specs."""
    b = spec.world_bounds
    doc = {
        "name": spec.name,
        "bounds": [b.xmin, b.ymin, b.xmax, b.ymax],
        "obstacles": [[s.a.x, s.a.y, s.b.x, s.b.y] for s in spec.obstacles.segments],
        "agents": [_agent_doc(a) for a in spec.agents],
        "config": {
            "dt": spec.config.dt,
            "planner": spec.config.planner,
            "avoidance": spec.config.avoidance,
            "planner_params": _params_doc(spec.config.planner_params),
            "avoidance_params": _params_doc(spec.config.avoidance_params),
            "seed": spec.config.seed,
            "laser": {
                "fov": spec.config.laser.fov,
                "max_range": spec.config.laser.max_range,
                "beam_count": spec.config.laser.beam_count,
                "rate_divisor": spec.config.laser.rate_divisor,
                "mount_x": spec.config.laser.mount_offset.x,
                "mount_y": spec.config.laser.mount_offset.y,
            },
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def load_scenario_file(path: str) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def with_extra_agents(spec: ScenarioSpec, extra: tuple[AgentSpec, ...]) -> ScenarioSpec:
    return replace(spec, agents=spec.agents + extra)
