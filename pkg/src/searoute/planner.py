"""Single-route constructor.

A route grows one waypoint at a time from the start. Each step samples
candidates in equal-angle sectors of the ship's domain around the current last
point, drops candidates whose connecting edge is unsafe, and appends the one
with the best point fitness. The destination is appended directly once it is
inside the domain and reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .depthmap import DepthGrid, _edge_clear_fast
from .geometry import DegenerateAngleError, Point, bearing, distance, sample_annular_sectors, vertex_angle
from .route import Route, SafetyModel, ShipSpec, position_is_safe, recompute_timing

POLICY_KINDS = ("constant", "growing", "random", "min-radius")


class RouteNotFound(RuntimeError):
    """Planning failed. ``reason`` is one of ``"budget"`` (point budget
    exhausted), ``"isolated"`` (start or destination fails the footprint
    check) or ``"dead-end"`` (every candidate unsafe twice in a row)."""

    def __init__(self, reason: str, message: str = ""):
        self.reason = reason
        super().__init__(message or reason)


@dataclass(frozen=True)
class DomainPolicy:
    kind: str = "constant"
    base_radius: float | None = None  # None -> ship.length * ship.domain_radius_factor
    growth_rate: float = 0.1
    radius_bounds: tuple[float, float] | None = None  # None -> (0.5, 1.5) * base
    min_radius: float | None = None  # None -> 0.3 * base

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown domain policy {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.base_radius is not None and not self.base_radius > 0:
            raise ValueError(f"base_radius must be positive, got {self.base_radius}")
        if self.radius_bounds is not None:
            lo, hi = self.radius_bounds
            if not 0 < lo <= hi:
                raise ValueError(f"radius_bounds must be ordered and positive, got {self.radius_bounds}")
        if self.min_radius is not None and self.base_radius is not None:
            if not 0 < self.min_radius < self.base_radius:
                raise ValueError("min_radius must lie in (0, base_radius)")

    def base(self, ship: ShipSpec) -> float:
        return self.base_radius if self.base_radius is not None else ship.domain_radius

    def inner_radius(self, ship: ShipSpec) -> float:
        if self.kind != "min-radius":
            return 0.0
        return self.min_radius if self.min_radius is not None else 0.3 * self.base(ship)


@dataclass(frozen=True)
class PlannerConfig:
    policy: DomainPolicy = field(default_factory=DomainPolicy)
    sectors: int = 8
    points_per_sector: int = 4
    max_points: int | None = None  # None -> ceil(4 * map diagonal / base radius)
    xi: float = 1.0
    psi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sectors < 1 or self.points_per_sector < 1:
            raise ValueError("sectors and points_per_sector must be >= 1")
        if self.max_points is not None and self.max_points < 2:
            raise ValueError(f"max_points must be >= 2, got {self.max_points}")
        if self.xi < 0 or self.psi < 0:
            raise ValueError("xi and psi must be non-negative")

    def point_budget(self, ship: ShipSpec, grid: DepthGrid) -> int:
        if self.max_points is not None:
            return self.max_points
        return max(2, math.ceil(4.0 * grid.diagonal / self.policy.base(ship)))


def domain_radius(policy: DomainPolicy, step_index: int, ship: ShipSpec, rng: np.random.Generator) -> float:
    base = policy.base(ship)
    if policy.kind == "growing":
        return min(base * (1.0 + policy.growth_rate * step_index), 3.0 * base)
    if policy.kind == "random":
        lo, hi = policy.radius_bounds or (0.5 * base, 1.5 * base)
        return float(rng.uniform(lo, hi))
    return base


def generate_candidates(
    last: Point, radius: float, cfg: PlannerConfig, rng: np.random.Generator, ship: ShipSpec | None = None
) -> np.ndarray:
    """``sectors * points_per_sector`` candidate points, sector by sector."""
    if not radius > 0:
        raise ValueError(f"domain radius must be positive, got {radius}")
    if ship is not None:
        inner = cfg.policy.inner_radius(ship)
    elif cfg.policy.kind == "min-radius":
        inner = cfg.policy.min_radius or 0.0
    else:
        inner = 0.0
    if inner >= radius:
        inner = 0.0
    return sample_annular_sectors(last, inner, radius, cfg.sectors, cfg.points_per_sector, rng)


def point_fitness(candidate: Point, last: Point, before_last: Point | None, dest: Point, cfg: PlannerConfig) -> float:
    """Two-component fitness: closeness to the destination relative to the
    last point, plus a bonus for keeping the current heading."""
    d_cd = distance(last, dest)
    if d_cd <= 0:
        raise ValueError("last point already coincides with the destination")
    d_td = distance(candidate, dest)
    if candidate[0] == last[0] and candidate[1] == last[1]:
        raise DegenerateAngleError("candidate coincides with the last route point")
    theta = 180.0 if before_last is None else vertex_angle(before_last, last, candidate)
    return -cfg.xi * (d_td / d_cd) + cfg.psi * (theta / 180.0)


def _score_candidates(cands: np.ndarray, last, before_last, dest, cfg: PlannerConfig) -> tuple[np.ndarray, np.ndarray]:
    # vectorised point_fitness; geometry matches vertex_angle exactly
    d_cd = distance(last, dest)
    d_td = np.hypot(cands[:, 0] - dest[0], cands[:, 1] - dest[1])
    if before_last is None:
        theta = np.full(len(cands), 180.0)
    else:
        ux, uy = before_last[0] - last[0], before_last[1] - last[1]
        vx, vy = cands[:, 0] - last[0], cands[:, 1] - last[1]
        theta = np.degrees(np.arctan2(np.abs(ux * vy - uy * vx), ux * vx + uy * vy))
    return -cfg.xi * (d_td / d_cd) + cfg.psi * (theta / 180.0), d_td


_KIND_CODES = {"constant": 0, "growing": 1, "random": 2, "min-radius": 3}
_FAILURES = {1: "budget", 2: "dead-end"}


@numba.njit(cache=True)
def _grow_route(depths, cs, clearance, hl, hw, probe, sample, threshold, sx, sy, tx, ty,
                kind, base, growth, rlo, rhi, inner, sectors, per_sector, budget, xi, psi, rng):
    # Mirrors domain_radius / generate_candidates / point_fitness step by step,
    # consuming the generator in the same order. Status: 0 ok, 1 budget, 2 dead-end.
    pts = np.empty((budget, 2))
    pts[0, 0] = sx
    pts[0, 1] = sy
    n = 1
    step = 0
    m = sectors * per_sector
    width = 2.0 * math.pi / sectors
    while True:
        lx = pts[n - 1, 0]
        ly = pts[n - 1, 1]
        if kind == 1:
            radius = min(base * (1.0 + growth * step), 3.0 * base)
        elif kind == 2:
            radius = rng.uniform(rlo, rhi)
        else:
            radius = base
        step += 1
        d_cd = math.hypot(lx - tx, ly - ty)
        if d_cd <= radius and _edge_clear_fast(depths, cs, clearance, lx, ly, tx, ty,
                                               hl, hw, probe, sample, threshold):
            pts[n, 0] = tx
            pts[n, 1] = ty
            return pts[: n + 1], 0
        if n + 1 >= budget:
            return pts[:n], 1
        r_in = inner if inner < radius else 0.0
        have_prev = n > 1
        ux = pts[n - 2, 0] - lx if have_prev else 0.0
        uy = pts[n - 2, 1] - ly if have_prev else 0.0
        found = False
        bx = 0.0
        by = 0.0
        cx = np.empty(m)
        cy = np.empty(m)
        fit = np.empty(m)
        dist = np.empty(m)
        for _attempt in range(2):
            rho = np.sqrt(rng.uniform(r_in * r_in, radius * radius, m))
            theta = rng.uniform(0.0, width, m)
            for k in range(m):
                ang = (k // per_sector) * width + theta[k]
                cx[k] = lx + rho[k] * math.cos(ang)
                cy[k] = ly + rho[k] * math.sin(ang)
                d_td = math.hypot(cx[k] - tx, cy[k] - ty)
                if have_prev:
                    vx = cx[k] - lx
                    vy = cy[k] - ly
                    angle = math.degrees(math.atan2(abs(ux * vy - uy * vx), ux * vx + uy * vy))
                else:
                    angle = 180.0
                dist[k] = d_td
                fit[k] = -xi * (d_td / d_cd) + psi * (angle / 180.0)
                if cx[k] == lx and cy[k] == ly:
                    fit[k] = -np.inf
            # safety is independent of fitness: walk candidates best-first and
            # stop at the first safe one
            alive = fit > -np.inf
            while not found:
                pick = -1
                for k in range(m):
                    if alive[k] and (pick < 0 or fit[k] > fit[pick]
                                     or (fit[k] == fit[pick] and dist[k] < dist[pick])):
                        pick = k
                if pick < 0:
                    break
                alive[pick] = False
                if _edge_clear_fast(depths, cs, clearance, lx, ly, cx[pick], cy[pick],
                                    hl, hw, probe, sample, threshold):
                    bx = cx[pick]
                    by = cy[pick]
                    found = True
            if found:
                break
        if not found:
            return pts[:n], 2
        pts[n, 0] = bx
        pts[n, 1] = by
        n += 1


def plan_route(
    start: Point,
    dest: Point,
    ship: ShipSpec,
    grid: DepthGrid,
    cfg: PlannerConfig,
    rng: np.random.Generator | None = None,
    safety: SafetyModel | None = None,
) -> Route:
    """Build one safe route from ``start`` to ``dest`` or raise :class:`RouteNotFound`.

    Each step: draw the domain radius, append the destination if it is inside
    the domain and reachable, otherwise sample candidates, keep those with a
    safe connecting edge and append the one with the best point fitness (ties:
    smaller distance to go, then sampling order). A step whose candidates are
    all unsafe is resampled once before giving up.
    """
    start, dest = Point(float(start[0]), float(start[1])), Point(float(dest[0]), float(dest[1]))
    if start == dest:
        raise ValueError("start and destination coincide")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if safety is None:
        safety = SafetyModel(ship, grid)
    heading = bearing(start, dest)
    if not position_is_safe(start, heading, ship, grid):
        raise RouteNotFound("isolated", f"start {tuple(start)} is not navigable")
    if not position_is_safe(dest, heading, ship, grid):
        raise RouteNotFound("isolated", f"destination {tuple(dest)} is not navigable")

    policy = cfg.policy
    base = policy.base(ship)
    rlo, rhi = policy.radius_bounds or (0.5 * base, 1.5 * base)
    budget = cfg.point_budget(ship, grid)
    pts, status = _grow_route(
        grid.depths, grid.cell_size, safety._clearance, safety._hl, safety._hw, safety._probe,
        safety._sample, ship.required_depth, start.x, start.y, dest.x, dest.y,
        _KIND_CODES[policy.kind], base, policy.growth_rate, rlo, rhi, policy.inner_radius(ship),
        cfg.sectors, cfg.points_per_sector, budget, cfg.xi, cfg.psi, rng,
    )
    if status:
        raise RouteNotFound(_FAILURES[status], f"{_FAILURES[status]} after {len(pts)} waypoints")
    return recompute_timing(Route(pts), ship, 0.0)


def with_policy(cfg: PlannerConfig, kind: str) -> PlannerConfig:
    return replace(cfg, policy=replace(cfg.policy, kind=kind))
