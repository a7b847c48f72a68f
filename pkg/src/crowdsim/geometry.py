"""Exact 2-D geometry: vectors, obstacle sets, occupancy grids, raycasting.

All types are immutable values after construction and all operations are
pure functions, safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import EmptyBounds, InvalidDirection

NO_HIT = math.inf


@dataclass(frozen=True)
class Vec2:
    """A point or displacement in meters. Components must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite Vec2 components ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def normalized(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)

    def perp(self) -> "Vec2":
        """Left-hand perpendicular."""
        return Vec2(-self.y, self.x)

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Segment:
    """A wall segment; endpoints must differ."""

    a: Vec2
    b: Vec2

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"degenerate segment at ({self.a.x}, {self.a.y})")

    def closest_point(self, p: Vec2) -> Vec2:
        qx, qy = kernels.seg_closest_point(self.a.x, self.a.y,
                                           self.b.x, self.b.y, p.x, p.y)
        return Vec2(qx, qy)

    def distance_to(self, p: Vec2) -> float:
        return kernels.seg_point_dist(self.a.x, self.a.y,
                                      self.b.x, self.b.y, p.x, p.y)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains(self, p: Vec2) -> bool:
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax

    def is_degenerate(self) -> bool:
        return self.width <= 0.0 or self.height <= 0.0


@dataclass(frozen=True)
class ObstacleSet:
    """A set of wall segments with a bounding rectangle."""

    segments: tuple[Segment, ...] = ()
    _array: np.ndarray | None = field(default=None, repr=False, compare=False)

    @staticmethod
    def from_segments(segments: Iterable[Segment]) -> "ObstacleSet":
        return ObstacleSet(tuple(segments))

    @property
    def bounds(self) -> Rect:
        if not self.segments:
            return Rect(0.0, 0.0, 0.0, 0.0)
        xs = [p for s in self.segments for p in (s.a.x, s.b.x)]
        ys = [p for s in self.segments for p in (s.a.y, s.b.y)]
        return Rect(min(xs), min(ys), max(xs), max(ys))

    def as_array(self) -> np.ndarray:
        """(S, 4) float64 array of segment endpoints, cached."""
        if self._array is None:
            arr = np.array([[s.a.x, s.a.y, s.b.x, s.b.y] for s in self.segments],
                           np.float64).reshape(len(self.segments), 4)
            object.__setattr__(self, "_array", arr)
        return self._array

    def __len__(self) -> int:
        return len(self.segments)


@dataclass(frozen=True)
class OccupancyGrid:
    """Boolean occupancy over a uniform grid; cells[iy, ix] row-major."""

    origin: Vec2
    resolution: float
    width: int
    height: int
    cells: np.ndarray = field(compare=False)

    def __post_init__(self):
        if self.resolution <= 0.0:
            raise ValueError("resolution must be positive")
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cell array shape does not match width/height")

    def in_bounds_point(self, p: Vec2) -> bool:
        return (self.origin.x <= p.x <= self.origin.x + self.width * self.resolution
                and self.origin.y <= p.y <= self.origin.y + self.height * self.resolution)

    def cell_of(self, p: Vec2) -> tuple[int, int]:
        """Cell (ix, iy) containing p; points on the max edge map inward."""
        ix = int((p.x - self.origin.x) / self.resolution)
        iy = int((p.y - self.origin.y) / self.resolution)
        ix = min(max(ix, 0), self.width - 1)
        iy = min(max(iy, 0), self.height - 1)
        return ix, iy

    def center(self, ix: int, iy: int) -> Vec2:
        return Vec2(self.origin.x + (ix + 0.5) * self.resolution,
                    self.origin.y + (iy + 0.5) * self.resolution)

    def is_occupied(self, ix: int, iy: int) -> bool:
        return bool(self.cells[iy, ix])

    @property
    def occupied_count(self) -> int:
        return int(self.cells.sum())


def ray_cast(origin: Vec2, direction: Vec2, max_range: float,
             obstacles: ObstacleSet,
             discs: Sequence[tuple[Vec2, float]] = ()) -> float:
    """Distance to the first segment or disc hit, or NO_HIT (inf).

    `direction` must be unit length within 1e-9. The hit parameter lies in
    (0, max_range]; rays exactly parallel to a segment (or tangent to a
    disc within the 1e-12 discriminant epsilon) do not hit it.
    """
    if abs(direction.norm() - 1.0) > 1e-9:
        raise InvalidDirection(f"|direction| = {direction.norm()!r}, expected 1")
    if max_range <= 0.0:
        raise ValueError("max_range must be positive")
    best = NO_HIT
    for s in obstacles.segments:
        t = kernels.ray_segment_t(origin.x, origin.y, direction.x, direction.y,
                                  s.a.x, s.a.y, s.b.x, s.b.y)
        if t < best:
            best = t
    for center, r in discs:
        t = kernels.ray_disc_t(origin.x, origin.y, direction.x, direction.y,
                               center.x, center.y, r)
        if t < best:
            best = t
    if best > max_range:
        return NO_HIT
    return best


def segment_segment_distance(a1: Vec2, b1: Vec2, a2: Vec2, b2: Vec2) -> float:
    """Minimum distance between two segments (0 when they intersect)."""
    d1 = b1 - a1
    d2 = b2 - a2
    denom = d1.cross(d2)
    if abs(denom) > 1e-15:
        q = a2 - a1
        t = q.cross(d2) / denom
        s = q.cross(d1) / denom
        if 0.0 <= t <= 1.0 and 0.0 <= s <= 1.0:
            return 0.0
    return min(
        kernels.seg_point_dist(a1.x, a1.y, b1.x, b1.y, a2.x, a2.y),
        kernels.seg_point_dist(a1.x, a1.y, b1.x, b1.y, b2.x, b2.y),
        kernels.seg_point_dist(a2.x, a2.y, b2.x, b2.y, a1.x, a1.y),
        kernels.seg_point_dist(a2.x, a2.y, b2.x, b2.y, b1.x, b1.y),
    )


def _segment_box_distance(seg: Segment, xmin, ymin, xmax, ymax) -> float:
    inside_a = xmin <= seg.a.x <= xmax and ymin <= seg.a.y <= ymax
    inside_b = xmin <= seg.b.x <= xmax and ymin <= seg.b.y <= ymax
    if inside_a or inside_b:
        return 0.0
    corners = (Vec2(xmin, ymin), Vec2(xmax, ymin), Vec2(xmax, ymax), Vec2(xmin, ymax))
    best = math.inf
    for i in range(4):
        d = segment_segment_distance(seg.a, seg.b, corners[i], corners[(i + 1) % 4])
        if d < best:
            best = d
    return best


def rasterize(obstacles: ObstacleSet, resolution: float, inflation: float,
              bounds: Rect | None = None) -> OccupancyGrid:
    """Conservative occupancy grid: a cell is occupied when its square
    intersects any segment dilated by `inflation`.

    Raises EmptyBounds when the obstacle set is empty/degenerate and no
    explicit bounds are given.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    if inflation < 0.0:
        raise ValueError("inflation must be non-negative")
    if bounds is None:
        bounds = obstacles.bounds
        if bounds.is_degenerate():
            raise EmptyBounds("obstacle bounds are degenerate; pass explicit bounds")
    if bounds.is_degenerate():
        raise EmptyBounds("world bounds are degenerate")

    width = max(1, math.ceil(bounds.width / resolution - 1e-9))
    height = max(1, math.ceil(bounds.height / resolution - 1e-9))
    origin = Vec2(bounds.xmin, bounds.ymin)
    cells = np.zeros((height, width), dtype=bool)

    for seg in obstacles.segments:
        lo_x = min(seg.a.x, seg.b.x) - inflation
        hi_x = max(seg.a.x, seg.b.x) + inflation
        lo_y = min(seg.a.y, seg.b.y) - inflation
        hi_y = max(seg.a.y, seg.b.y) + inflation
        ix0 = max(0, int((lo_x - origin.x) / resolution) - 1)
        ix1 = min(width - 1, int((hi_x - origin.x) / resolution) + 1)
        iy0 = max(0, int((lo_y - origin.y) / resolution) - 1)
        iy1 = min(height - 1, int((hi_y - origin.y) / resolution) + 1)
        for iy in range(iy0, iy1 + 1):
            cy0 = origin.y + iy * resolution
            for ix in range(ix0, ix1 + 1):
                if cells[iy, ix]:
                    continue
                cx0 = origin.x + ix * resolution
                d = _segment_box_distance(seg, cx0, cy0,
                                          cx0 + resolution, cy0 + resolution)
                if d <= inflation:
                    cells[iy, ix] = True

    cells.setflags(write=False)
    return OccupancyGrid(origin=origin, resolution=resolution,
                         width=width, height=height, cells=cells)
