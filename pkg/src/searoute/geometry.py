"""Planar geometry primitives: points, oriented rectangles, vertex angles and
area-uniform sampling inside annular sectors.

All coordinates are meters in a flat x/y frame. Headings are radians measured
counterclockwise from +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Point(NamedTuple):
    x: float
    y: float


class DegenerateAngleError(ValueError):
    """Raised when a vertex angle is requested for coincident points."""


@dataclass(frozen=True)
class OrientedRect:
    center: Point
    length: float
    width: float
    heading: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"rectangle dimensions must be positive, got {self.length} x {self.width}")


def distance(a: Point, b: Point) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def bearing(a: Point, b: Point) -> float:
    """Heading of the direction a -> b in radians."""
    return math.atan2(b[1] - a[1], b[0] - a[0])


def vertex_angle(prev: Point, vertex: Point, next: Point) -> float:
    """Interior angle at ``vertex`` between segments (prev, vertex) and
    (vertex, next), in degrees.

    Straight continuation gives 180, an exact reversal gives 0.
    """
    ux, uy = prev[0] - vertex[0], prev[1] - vertex[1]
    vx, vy = next[0] - vertex[0], next[1] - vertex[1]
    if (ux == 0.0 and uy == 0.0) or (vx == 0.0 and vy == 0.0):
        raise DegenerateAngleError(f"coincident points at vertex {tuple(vertex)}")
    # atan2 of cross/dot stays accurate near 0 and 180 where acos does not
    return math.degrees(math.atan2(abs(ux * vy - uy * vx), ux * vx + uy * vy))


def rect_corners(r: OrientedRect) -> list[Point]:
    """Corners in counterclockwise order, starting at front-left."""
    c, s = math.cos(r.heading), math.sin(r.heading)
    hl, hw = r.length / 2.0, r.width / 2.0
    cx, cy = r.center
    corners = []
    for dl, dw in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        corners.append(Point(cx + dl * c - dw * s, cy + dl * s + dw * c))
    return corners


def sample_in_annular_sector(
    center: Point,
    r_min: float,
    r_max: float,
    angle_lo: float,
    angle_hi: float,
    rng: np.random.Generator,
) -> Point:
    """Draw one point uniformly by area from an annular sector around ``center``."""
    if not (0.0 <= r_min < r_max) or not (angle_lo < angle_hi):
        raise ValueError(
            f"invalid sector bounds r=[{r_min}, {r_max}] angle=[{angle_lo}, {angle_hi}]"
        )
    rho = math.sqrt(rng.uniform(r_min * r_min, r_max * r_max))
    theta = rng.uniform(angle_lo, angle_hi)
    return Point(center[0] + rho * math.cos(theta), center[1] + rho * math.sin(theta))


def sample_annular_sectors(
    center: Point,
    r_min: float,
    r_max: float,
    sectors: int,
    per_sector: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorised sector sampling: ``per_sector`` points in each of ``sectors``
    equal slices of the annulus. Returns an array of shape (sectors * per_sector, 2)
    ordered sector by sector.
    """
    if not (0.0 <= r_min < r_max) or sectors < 1 or per_sector < 1:
        raise ValueError(f"invalid sector layout r=[{r_min}, {r_max}] {sectors}x{per_sector}")
    n = sectors * per_sector
    width = 2.0 * math.pi / sectors
    lo = np.repeat(np.arange(sectors) * width, per_sector)
    rho = np.sqrt(rng.uniform(r_min * r_min, r_max * r_max, size=n))
    theta = lo + rng.uniform(0.0, width, size=n)
    out = np.empty((n, 2))
    out[:, 0] = center[0] + rho * np.cos(theta)
    out[:, 1] = center[1] + rho * np.sin(theta)
    return out


def sample_in_disc(center: Point, radius: float, rng: np.random.Generator) -> Point:
    return sample_in_annular_sector(center, 0.0, radius, 0.0, 2.0 * math.pi, rng)
