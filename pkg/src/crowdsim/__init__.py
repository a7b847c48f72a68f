"""crowdsim: a deterministic 2-D crowd + robot simulator.

Pedestrians follow a goal-selection / plan-computation / collision-
avoidance pipeline (A* or potential fields; ORCA or social force); robots
are circular agents driven purely by external velocity commands and carry
a simulated laser scanner. A newline-delimited JSON TCP service exposes
scans, pose state, and command input to external controllers.
"""

from .avoidance import (OrcaLine, OrcaParams, SocialForceParams, orca_lines,
                        orca_solve, social_force_velocity)
from .engine import (AgentPose, AgentState, CollisionEvent, CycleStats,
                     Engine, LaserScan, SimSnapshot, TrajectoryRecorder,
                     VelocityCommand, snapshot_log_line)
from .errors import (CrowdsimError, EmptyBounds, InvalidDirection, NoPath,
                     NotARobot, OccupiedEndpoint, OutOfBounds,
                     PlacementFailure, ProtocolError, ScenarioSyntaxError,
                     UnknownRobot, ValidationError)
from .geometry import (NO_HIT, ObstacleSet, OccupancyGrid, Rect, Segment,
                       Vec2, ray_cast, rasterize)
from .navigation import (GoalFieldPlanner, Path, PotentialParams,
                         TargetProgress, advance_goal, astar_plan,
                         potential_field_velocity, potential_gradient,
                         preferred_velocity_astar)
from .scenario import (AgentSpec, AStarParams, GoalSpec, LaserConfig,
                       PointGoal, RegionGoal, ScenarioSpec, SimConfig,
                       parse_scenario, serialize_scenario, validate_spec)

__version__ = "0.1.0"
