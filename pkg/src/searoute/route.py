"""Ship description, route model with timing, corridor safety and route cost."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import depthmap
from .depthmap import DepthGrid
from .geometry import OrientedRect, Point, bearing

UNSAFE_COST = math.inf


class RouteStructureError(ValueError):
    pass


@dataclass(frozen=True)
class ShipSpec:
    length: float = 30.0
    beam: float = 6.0
    draught: float = 3.0
    service_speed: float = 5.0
    footprint_factor: float = 1.25
    depth_clearance: float | None = None  # None -> max(0.5 m, 10% of draught)
    domain_radius_factor: float = 5.0

    def __post_init__(self):
        for name in ("length", "beam", "draught", "service_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.footprint_factor < 1 or self.domain_radius_factor < 1:
            raise ValueError("footprint_factor and domain_radius_factor must be >= 1")
        if self.depth_clearance is None:
            object.__setattr__(self, "depth_clearance", max(0.5, 0.1 * self.draught))
        elif self.depth_clearance < 0:
            raise ValueError(f"depth_clearance must be >= 0, got {self.depth_clearance}")

    @property
    def required_depth(self) -> float:
        return self.draught + self.depth_clearance

    @property
    def domain_radius(self) -> float:
        return self.length * self.domain_radius_factor

    def footprint(self, center: Point, heading: float) -> OrientedRect:
        return OrientedRect(
            Point(*center), self.length * self.footprint_factor, self.beam * self.footprint_factor, heading
        )


@dataclass(frozen=True)
class Waypoint:
    position: Point
    arrival_time: float = 0.0
    departure_time: float = 0.0
    speed: float = 0.0
    turn_radius: float = 0.0


@dataclass(eq=False)
class Route:
    """Variable-length waypoint chain stored column-wise.

    ``xy`` has shape (n, 2); the per-waypoint arrays have length n. A speed of
    0 means "unset" and falls back to the ship's service speed on retiming.
    Treat instances as immutable; operators return new routes.
    """

    xy: np.ndarray
    speeds: np.ndarray = None
    arrival: np.ndarray = None
    departure: np.ndarray = None
    turn_radius: np.ndarray = None

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=np.float64).reshape(-1, 2)
        n = len(self.xy)
        if n < 2:
            raise RouteStructureError(f"a route needs at least 2 waypoints, got {n}")
        for name in ("speeds", "arrival", "departure", "turn_radius"):
            v = getattr(self, name)
            v = np.zeros(n) if v is None else np.asarray(v, dtype=np.float64)
            if v.shape != (n,):
                raise RouteStructureError(f"{name} has shape {v.shape}, expected ({n},)")
            setattr(self, name, v)

    @classmethod
    def from_points(cls, points) -> "Route":
        return cls(np.array([tuple(p) for p in points], dtype=np.float64))

    @classmethod
    def from_waypoints(cls, waypoints: list[Waypoint]) -> "Route":
        return cls(
            np.array([tuple(w.position) for w in waypoints]),
            np.array([w.speed for w in waypoints]),
            np.array([w.arrival_time for w in waypoints]),
            np.array([w.departure_time for w in waypoints]),
            np.array([w.turn_radius for w in waypoints]),
        )

    def __len__(self):
        return len(self.xy)

    def __eq__(self, other):
        if not isinstance(other, Route):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("xy", "speeds", "arrival", "departure", "turn_radius")
        )

    @property
    def start(self) -> Point:
        return Point(*self.xy[0])

    @property
    def dest(self) -> Point:
        return Point(*self.xy[-1])

    @property
    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.xy]

    @property
    def waypoints(self) -> list[Waypoint]:
        return [
            Waypoint(Point(float(x), float(y)), float(a), float(d), float(v), float(r))
            for (x, y), a, d, v, r in zip(self.xy, self.arrival, self.departure, self.speeds, self.turn_radius)
        ]

    @property
    def arrival_time(self) -> float:
        return float(self.arrival[-1])

    def edge_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.xy, axis=0).T)

    def length(self) -> float:
        return float(self.edge_lengths().sum())

    def edges(self):
        for k in range(len(self.xy) - 1):
            yield self.xy[k], self.xy[k + 1]

    def take(self, index) -> "Route":
        """Sub-route / reordering by waypoint index (fancy indexing)."""
        return Route(self.xy[index], self.speeds[index], self.arrival[index],
                     self.departure[index], self.turn_radius[index])

    @staticmethod
    def concat(head: "Route", head_end: int, tail: "Route", tail_start: int) -> "Route":
        """``head[0..head_end] + tail[tail_start..]`` (both bounds inclusive)."""
        cols = [
            np.concatenate([getattr(head, f)[: head_end + 1], getattr(tail, f)[tail_start:]])
            for f in ("xy", "speeds", "arrival", "departure", "turn_radius")
        ]
        return Route(*cols)


def recompute_timing(route: Route, ship: ShipSpec, start_time: float = 0.0) -> Route:
    """Forward timing pass over every waypoint.

    Departure equals arrival (no waiting). Unset speeds (<= 0) take the ship's
    service speed; the destination's speed is left as-is.
    """
    lengths = route.edge_lengths()
    if np.any(lengths == 0):
        k = int(np.flatnonzero(lengths == 0)[0])
        raise RouteStructureError(f"zero-length edge between waypoints {k} and {k + 1}")
    speeds = route.speeds.copy()
    unset = speeds[:-1] <= 0
    speeds[:-1][unset] = ship.service_speed
    arrival = np.empty(len(route))
    arrival[0] = start_time
    arrival[1:] = start_time + np.cumsum(lengths / speeds[:-1])
    return Route(route.xy.copy(), speeds, arrival, arrival.copy(), route.turn_radius.copy())


def _probe_steps(ship: ShipSpec, grid: DepthGrid) -> tuple[float, float]:
    probe = min(ship.length / 2.0, grid.cell_size)
    sample = min(grid.cell_size, ship.beam) / 2.0
    return probe, sample


def edge_is_safe(a: Point, b: Point, ship: ShipSpec, grid: DepthGrid) -> bool:
    """Sweep the ship's footprint rectangle along (a, b) and require every
    sampled depth to exceed draught + clearance."""
    probe, sample = _probe_steps(ship, grid)
    return bool(depthmap._edge_clear(
        grid.depths, grid.cell_size, float(a[0]), float(a[1]), float(b[0]), float(b[1]),
        ship.length * ship.footprint_factor / 2.0, ship.beam * ship.footprint_factor / 2.0,
        probe, sample, ship.required_depth,
    ))


def position_is_safe(p: Point, heading: float, ship: ShipSpec, grid: DepthGrid) -> bool:
    """Zero-length footprint check at a single position."""
    _, sample = _probe_steps(ship, grid)
    depth = depthmap.min_depth_in_rect(grid, ship.footprint(p, heading), sample)
    return depth > ship.required_depth


def route_is_safe(route: Route, ship: ShipSpec, grid: DepthGrid) -> bool:
    return all(edge_is_safe(a, b, ship, grid) for a, b in route.edges())


def route_cost(route: Route, ship: ShipSpec, grid: DepthGrid) -> float:
    """Arrival time at the destination starting from t=0, or ``UNSAFE_COST``."""
    try:
        timed = recompute_timing(route, ship, 0.0)
    except RouteStructureError:
        return UNSAFE_COST
    if not route_is_safe(timed, ship, grid):
        return UNSAFE_COST
    return timed.arrival_time


@dataclass
class SafetyModel:
    """Edge-safety oracle bound to one ship and map, memoising edge verdicts.

    Routes produced by crossover and elitism share most of their edges, so the
    cache removes the bulk of repeated corridor sweeps.
    """

    ship: ShipSpec
    grid: DepthGrid
    max_cache: int = 200_000
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._clearance = depthmap.hazard_clearance(self.grid, self.ship.required_depth)
        self._probe, self._sample = _probe_steps(self.ship, self.grid)
        self._hl = self.ship.length * self.ship.footprint_factor / 2.0
        self._hw = self.ship.beam * self.ship.footprint_factor / 2.0

    def _sweep(self, ax, ay, bx, by) -> bool:
        return bool(depthmap._edge_clear_fast(
            self.grid.depths, self.grid.cell_size, self._clearance, ax, ay, bx, by,
            self._hl, self._hw, self._probe, self._sample, self.ship.required_depth,
        ))

    def fan_is_safe(self, a, targets: np.ndarray) -> np.ndarray:
        """Verdicts for the edges from ``a`` to every row of ``targets`` (uncached)."""
        return depthmap._fan_clear(
            self.grid.depths, self.grid.cell_size, self._clearance, float(a[0]), float(a[1]),
            np.ascontiguousarray(targets, dtype=np.float64), self._hl, self._hw,
            self._probe, self._sample, self.ship.required_depth,
        )

    def edge_is_safe(self, a, b) -> bool:
        key = (float(a[0]), float(a[1]), float(b[0]), float(b[1]))
        hit = self._cache.get(key)
        if hit is None:
            hit = self._sweep(*key)
            if len(self._cache) >= self.max_cache:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def route_is_safe(self, route: Route) -> bool:
        return all(self.edge_is_safe(a, b) for a, b in route.edges())

    def cost(self, route: Route) -> float:
        """Same contract as :func:`route_cost`, but reads the route's stored
        timing; call on retimed routes only."""
        if not np.isfinite(route.arrival[-1]) or not self.route_is_safe(route):
            return UNSAFE_COST
        return float(route.arrival[-1] - route.arrival[0])


def retime_or_flag(route: Route, ship: ShipSpec) -> Route:
    """Retime a route; structurally broken routes get infinite arrival times so
    they evaluate to the unsafe cost instead of raising."""
    try:
        return recompute_timing(route, ship, 0.0)
    except RouteStructureError:
        return replace(route, arrival=np.full(len(route), np.inf), departure=np.full(len(route), np.inf))


# -- serialisation ---------------------------------------------------------------

def route_to_dict(route: Route) -> dict:
    return {
        "format": "searoute-route/1",
        "waypoints": [
            {
                "x": w.position.x,
                "y": w.position.y,
                "arrival_s": w.arrival_time,
                "departure_s": w.departure_time,
                "speed_mps": w.speed,
                "turn_radius_m": w.turn_radius,
            }
            for w in route.waypoints
        ],
    }


def route_from_dict(data: dict) -> Route:
    try:
        wps = [
            Waypoint(Point(float(w["x"]), float(w["y"])), float(w["arrival_s"]), float(w["departure_s"]),
                     float(w["speed_mps"]), float(w.get("turn_radius_m", 0.0)))
            for w in data["waypoints"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise RouteStructureError(f"malformed route record: {exc}") from None
    return Route.from_waypoints(wps)


def save_route(route: Route, path) -> None:
    Path(path).write_text(json.dumps(route_to_dict(route), indent=2) + "\n", encoding="ascii")


def load_route(path) -> Route:
    try:
        data = json.loads(Path(path).read_text(encoding="ascii"))
    except json.JSONDecodeError as exc:
        raise RouteStructureError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return route_from_dict(data)
