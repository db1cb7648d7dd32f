"""Depth rasters: continuous depth queries, rectangle probes, synthetic map
generators and the DMAP1 text format.

Depths are positive downward. A value <= 0 is land. Samples sit on the lattice
points ``(i * cell_size, j * cell_size)``; ``depths[j, i]`` is row-major with
``j`` along +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from scipy import ndimage

from .geometry import OrientedRect, Point

LAND_DEPTH = -2.0
CLEAR_RADIUS = 500.0  # kept free of islands around start/destination


class DepthOutOfBounds(ValueError):
    pass


class MapFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class DepthGrid:
    depths: np.ndarray  # shape (height_cells, width_cells)
    cell_size: float

    def __post_init__(self):
        d = np.ascontiguousarray(self.depths, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] < 2 or d.shape[1] < 2:
            raise ValueError(f"depth raster must be at least 2x2, got shape {d.shape}")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if not np.all(np.isfinite(d)):
            raise ValueError("depth raster contains non-finite values")
        d.setflags(write=False)
        object.__setattr__(self, "depths", d)
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def width_cells(self) -> int:
        return self.depths.shape[1]

    @property
    def height_cells(self) -> int:
        return self.depths.shape[0]

    @property
    def extent(self) -> tuple[float, float]:
        return ((self.width_cells - 1) * self.cell_size, (self.height_cells - 1) * self.cell_size)

    @property
    def diagonal(self) -> float:
        return math.hypot(*self.extent)

    def contains(self, p: Point) -> bool:
        w, h = self.extent
        return 0.0 <= p[0] <= w and 0.0 <= p[1] <= h

    def __eq__(self, other):
        if not isinstance(other, DepthGrid):
            return NotImplemented
        return self.cell_size == other.cell_size and np.array_equal(self.depths, other.depths)

    @classmethod
    def constant(cls, size: float, depth: float, cell_size: float | None = None) -> "DepthGrid":
        cell_size = cell_size or size / 100.0
        n = int(round(size / cell_size)) + 1
        return cls(np.full((n, n), float(depth)), cell_size)


# -- kernels -----------------------------------------------------------------

@numba.njit(cache=True)
def _bilinear(depths, cs, x, y):
    h, w = depths.shape
    fx = x / cs
    fy = y / cs
    if not (0.0 <= fx <= w - 1) or not (0.0 <= fy <= h - 1):
        return np.nan
    i = min(int(fx), w - 2)
    j = min(int(fy), h - 2)
    tx = fx - i
    ty = fy - j
    d00 = depths[j, i]
    d10 = depths[j, i + 1]
    d01 = depths[j + 1, i]
    d11 = depths[j + 1, i + 1]
    return (d00 * (1.0 - tx) + d10 * tx) * (1.0 - ty) + (d01 * (1.0 - tx) + d11 * tx) * ty


@numba.njit(cache=True)
def _subdivisions(extent, step):
    # power-of-two counts keep coarser lattices nested inside finer ones
    n = 2
    while extent / n > step:
        n *= 2
    return n


@numba.njit(cache=True)
def _rect_min(depths, cs, cx, cy, c, s, hl, hw, step, stop_at):
    """Minimum sampled depth over a rectangle lattice; returns early once a
    sample is <= stop_at. Samples off the map count as depth 0."""
    nl = _subdivisions(2.0 * hl, step)
    nw = _subdivisions(2.0 * hw, step)
    best = np.inf
    for a in range(nl + 1):
        dl = -hl + 2.0 * hl * a / nl
        for b in range(nw + 1):
            dw = -hw + 2.0 * hw * b / nw
            v = _bilinear(depths, cs, cx + dl * c - dw * s, cy + dl * s + dw * c)
            if np.isnan(v):
                v = 0.0
            if v < best:
                best = v
                if best <= stop_at:
                    return best
    return best


@numba.njit(cache=True)
def _edge_clear(depths, cs, ax, ay, bx, by, hl, hw, probe_step, sample_step, threshold):
    dx = bx - ax
    dy = by - ay
    d = math.hypot(dx, dy)
    if d == 0.0:
        return False
    c = dx / d
    s = dy / d
    n = max(1, int(math.ceil(d / probe_step)))
    for k in range(n + 1):
        t = k / n
        v = _rect_min(depths, cs, ax + dx * t, ay + dy * t, c, s, hl, hw, sample_step, threshold)
        if v <= threshold:
            return False
    return True


@numba.njit(cache=True)
def _edge_clear_fast(depths, cs, clearance, ax, ay, bx, by, hl, hw, probe_step, sample_step, threshold):
    """Same verdict as ``_edge_clear``. Probes whose footprint provably stays
    clear of hazard cells (per ``clearance``) are skipped, together with every
    following probe that lies within the proven margin; the rest are sampled."""
    h, w = depths.shape
    dx = bx - ax
    dy = by - ay
    d = math.hypot(dx, dy)
    if d == 0.0:
        return False
    c = dx / d
    s = dy / d
    reach = math.hypot(hl, hw)
    n = max(1, int(math.ceil(d / probe_step)))
    spacing = d / n
    k = 0
    while k <= n:
        t = k / n
        x = ax + dx * t
        y = ay + dy * t
        fx = x / cs
        fy = y / cs
        if 0.0 <= fx <= w - 1 and 0.0 <= fy <= h - 1:
            margin = clearance[min(int(fy), h - 2) + 1, min(int(fx), w - 2) + 1] - reach
            if margin > 0.0:
                k += 1 + int(margin / spacing)
                continue
        v = _rect_min(depths, cs, x, y, c, s, hl, hw, sample_step, threshold)
        if v <= threshold:
            return False
        k += 1
    return True


@numba.njit(cache=True)
def _fan_clear(depths, cs, clearance, ax, ay, targets, hl, hw, probe_step, sample_step, threshold):
    """``_edge_clear_fast`` for many edges sharing the start point ``(ax, ay)``."""
    out = np.empty(targets.shape[0], dtype=np.bool_)
    for k in range(targets.shape[0]):
        out[k] = _edge_clear_fast(depths, cs, clearance, ax, ay, targets[k, 0], targets[k, 1],
                                  hl, hw, probe_step, sample_step, threshold)
    return out


def hazard_clearance(grid: DepthGrid, threshold: float) -> np.ndarray:
    """Lower bound on the distance (m) from any point of each cell to the
    nearest cell that may hold a depth <= ``threshold``.

    Bilinear values inside a cell never drop below the cell's smallest corner,
    so cells whose four corners all exceed ``threshold`` are hazard-free. The
    result is padded by one ring of hazard cells standing in for off-map area;
    entry ``[j + 1, i + 1]`` belongs to cell ``(i, j)``.
    """
    d = grid.depths
    corner_min = np.minimum(np.minimum(d[:-1, :-1], d[:-1, 1:]), np.minimum(d[1:, :-1], d[1:, 1:]))
    free = np.zeros((corner_min.shape[0] + 2, corner_min.shape[1] + 2), dtype=bool)
    free[1:-1, 1:-1] = corner_min > threshold
    centers = ndimage.distance_transform_edt(free) * grid.cell_size
    # center-to-center distance minus both half-diagonals, with a rounding guard
    return np.ascontiguousarray(centers - math.sqrt(2.0) * grid.cell_size - 1e-9 * grid.cell_size)


# -- queries -----------------------------------------------------------------

def depth_at(grid: DepthGrid, p: Point) -> float:
    v = _bilinear(grid.depths, grid.cell_size, float(p[0]), float(p[1]))
    if math.isnan(v):
        raise DepthOutOfBounds(f"point ({p[0]}, {p[1]}) outside the map extent {grid.extent}")
    return v


def min_depth_in_rect(grid: DepthGrid, r: OrientedRect, sample_step: float) -> float:
    """Conservative depth probe over a rectangle.

    Samples a lattice with spacing <= ``sample_step`` along both rectangle axes
    (corners and center always included). Off-map samples read as 0.
    """
    if not sample_step > 0:
        raise ValueError(f"sample_step must be positive, got {sample_step}")
    return _rect_min(
        grid.depths, grid.cell_size, float(r.center[0]), float(r.center[1]),
        math.cos(r.heading), math.sin(r.heading), r.length / 2.0, r.width / 2.0,
        float(sample_step), -np.inf,
    )


# -- generators ----------------------------------------------------------------

def _lattice(size: float, cell_size: float):
    n = int(round(size / cell_size)) + 1
    coords = np.arange(n) * cell_size
    xs, ys = np.meshgrid(coords, coords)
    return xs, ys


def _paint_boxes(size, deep, cell_size, boxes):
    xs, ys = _lattice(size, cell_size)
    depths = np.full(xs.shape, float(deep))
    for x0, x1, y0, y1 in boxes:
        mask = (xs >= x0 * size) & (xs <= x1 * size) & (ys >= y0 * size) & (ys <= y1 * size)
        depths[mask] = LAND_DEPTH
    return DepthGrid(depths, cell_size)


def gen_open_map(size: float = 500.0, deep: float = 20.0, cell_size: float | None = None) -> DepthGrid:
    return DepthGrid.constant(size, deep, cell_size)


def gen_wall_map(size: float = 500.0, deep: float = 20.0, cell_size: float | None = None) -> DepthGrid:
    """Dead-end pocket: a U-shaped barrier around the start that opens away
    from the destination, so the only way out leads backwards first."""
    cell_size = cell_size or size / 100.0
    boxes = [
        (0.42, 0.46, 0.21, 0.79),  # back wall, between start and destination
        (0.16, 0.46, 0.21, 0.25),  # lower arm
        (0.16, 0.46, 0.75, 0.79),  # upper arm
    ]
    return _paint_boxes(size, deep, cell_size, boxes)


def gen_labyrinth_map(
    size: float = 500.0, deep: float = 20.0, slats: int = 2, cell_size: float | None = None
) -> DepthGrid:
    """Land slats alternately attached to the bottom and top edges, leaving a
    serpentine channel between them."""
    if slats < 2:
        raise ValueError(f"labyrinth needs at least 2 slats, got {slats}")
    cell_size = cell_size or size / 100.0
    boxes = []
    for k in range(slats):
        xc = (k + 1) / (slats + 1)
        y0, y1 = (0.0, 0.7) if k % 2 == 0 else (0.3, 1.0)
        boxes.append((xc - 0.02, xc + 0.02, y0, y1))
    return _paint_boxes(size, deep, cell_size, boxes)


def gen_islands_map(
    size: float = 20000.0,
    deep: float = 20.0,
    island_count: int = 40,
    seed: int = 0,
    cell_size: float | None = None,
) -> DepthGrid:
    """Scattered elliptical islands with shoaling rims over deep water.

    Island cores (normalised radius < 0.8) are land; depth ramps linearly back
    to ``deep`` at normalised radius 1.2. Islands are rejected when their rim
    would reach within ``CLEAR_RADIUS`` of the start or destination corner.
    """
    if island_count < 0:
        raise ValueError(f"island_count must be >= 0, got {island_count}")
    cell_size = cell_size or size / 400.0
    rng = np.random.default_rng(seed)
    xs, ys = _lattice(size, cell_size)
    depths = np.full(xs.shape, float(deep))
    start, dest = archetype_endpoints("islands", size)
    scale = size / 20000.0
    placed = 0
    attempts = 0
    while placed < island_count and attempts < 1000 * (island_count + 1):
        attempts += 1
        a = rng.uniform(300.0, 1200.0) * scale
        b = a * rng.uniform(0.5, 1.0)
        phi = rng.uniform(0.0, math.pi)
        cx, cy = rng.uniform(0.0, size, size=2)
        reach = 1.2 * a + CLEAR_RADIUS
        if math.hypot(cx - start[0], cy - start[1]) < reach or math.hypot(cx - dest[0], cy - dest[1]) < reach:
            continue
        c, s = math.cos(phi), math.sin(phi)
        u = ((xs - cx) * c + (ys - cy) * s) / a
        v = (-(xs - cx) * s + (ys - cy) * c) / b
        rho = np.sqrt(u * u + v * v)
        island = deep * np.clip((rho - 0.8) / 0.4, LAND_DEPTH / deep, 1.0)
        np.minimum(depths, island, out=depths)
        placed += 1
    return DepthGrid(depths, cell_size)


def archetype_endpoints(archetype: str, size: float, slats: int = 2) -> tuple[Point, Point]:
    """Canonical start and destination for each synthetic map archetype."""
    if archetype == "wall":
        return Point(0.3 * size, 0.5 * size), Point(0.8 * size, 0.5 * size)
    if archetype == "labyrinth":
        x_end = (slats + 0.5) / (slats + 1)
        y_end = 0.1 if slats % 2 == 0 else 0.9
        return Point(0.5 / (slats + 1) * size, 0.1 * size), Point(x_end * size, y_end * size)
    if archetype == "islands":
        return Point(0.05 * size, 0.05 * size), Point(0.95 * size, 0.95 * size)
    if archetype == "open":
        return Point(0.2 * size, 0.2 * size), Point(0.8 * size, 0.8 * size)
    raise ValueError(f"unknown archetype {archetype!r}")


# -- DMAP1 I/O -----------------------------------------------------------------

def save_map(grid: DepthGrid, path) -> None:
    lines = [f"DMAP1 {grid.width_cells} {grid.height_cells} {grid.cell_size!r}"]
    for row in grid.depths:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def load_map(path) -> DepthGrid:
    text = Path(path).read_text(encoding="ascii")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MapFormatError("empty file", 1)
    header = lines[0].split()
    if len(header) != 4 or header[0] != "DMAP1":
        raise MapFormatError(f"expected 'DMAP1 <width> <height> <cell_size>', got {lines[0]!r}", 1)
    try:
        width, height = int(header[1]), int(header[2])
        cell_size = float(header[3])
    except ValueError:
        raise MapFormatError(f"non-numeric header field in {lines[0]!r}", 1) from None
    if width < 2 or height < 2:
        raise MapFormatError(f"grid must be at least 2x2, got {width}x{height}", 1)
    if not (cell_size > 0 and math.isfinite(cell_size)):
        raise MapFormatError(f"cell size must be positive, got {header[3]}", 1)
    if len(lines) - 1 != height:
        raise MapFormatError(f"expected {height} rows, found {len(lines) - 1}", len(lines))
    depths = np.empty((height, width))
    for j, line in enumerate(lines[1:]):
        lineno = j + 2
        fields = line.split()
        if len(fields) != width:
            raise MapFormatError(f"row {j} has {len(fields)} values, expected {width}", lineno)
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise MapFormatError(f"row {j} contains a non-numeric value", lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise MapFormatError(f"row {j} contains a non-finite value", lineno)
        depths[j] = row
    return DepthGrid(depths, cell_size)
