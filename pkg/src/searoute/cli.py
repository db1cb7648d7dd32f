"""Command-line front end: ``searoute genmap | plan | bench | render``.

Exit codes: 0 success, 2 no route found, 3 input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import depthmap
from .depthmap import DepthGrid, MapFormatError, archetype_endpoints, load_map, save_map
from .ga import GaConfig
from .geometry import Point
from .islands import IslandResult, IslandSetConfig, run_islands
from .planner import POLICY_KINDS, DomainPolicy, PlannerConfig, RouteNotFound
from .route import Route, RouteStructureError, ShipSpec, load_route, save_route

logger = logging.getLogger("searoute")

EXIT_OK, EXIT_NO_ROUTE, EXIT_INPUT = 0, 2, 3
GENMAP_RETRIES = 50


class InputError(ValueError):
    pass


# -- config --------------------------------------------------------------------

DEFAULTS = {
    "islands": "4",
    "generations": "300",
    "population": "20",
    "elites": "10",
    "mutation": "0.1",
    "crossover": "0.5",
    "crossover_operator": "short",
    "epoch": "100",
    "migration_pairs": "auto",
    "replenish_threshold": "auto",
    "planner_retries": "3",
    "seed": "0",
    "policies": ",".join(POLICY_KINDS),
    "sectors": "8",
    "points_per_sector": "4",
    "max_points": "auto",
    "xi": "1.0",
    "psi": "1.0",
    "base_radius": "auto",
    "growth_rate": "0.1",
    "radius_bounds": "auto",
    "min_radius": "auto",
    "ship_length": "30",
    "ship_beam": "6",
    "ship_draught": "3",
    "ship_speed": "5",
    "footprint_factor": "1.25",
    "depth_clearance": "auto",
    "domain_radius_factor": "5",
    "workers": "auto",
    "start": "auto",
    "dest": "auto",
}


@dataclass
class RunConfig:
    islands: IslandSetConfig
    ship: ShipSpec
    workers: int | None = None
    start: Point | None = None
    dest: Point | None = None
    name: str = "config"

    def with_seed(self, seed: int) -> "RunConfig":
        base = self.islands.islands[0]
        policies = tuple(c.planner.policy.kind for c in self.islands.islands)
        isl = IslandSetConfig.uniform(
            len(self.islands.islands), base, master_seed=seed, policies=policies,
            migration_epoch=self.islands.migration_epoch,
            migration_pairs_per_island=self.islands.migration_pairs_per_island,
            shared_generations=self.islands.shared_generations,
        )
        return replace(self, islands=isl)


def parse_point(text: str) -> Point:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"expected 'x,y' in meters, got {text!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InputError(f"coordinates must be finite, got {text!r}")
    return Point(x, y)


def read_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = dict(DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
        values[f"__line_{key}"] = str(lineno)
    values["__source"] = source
    return values


def build_config(values: dict[str, str], name: str = "config") -> RunConfig:
    source = values.get("__source", "<config>")

    def where(key):
        line = values.get(f"__line_{key}")
        return f"{source}:{line}" if line else source

    def get(key, conv, auto_ok=False):
        raw = values[key]
        if auto_ok and raw == "auto":
            return None
        try:
            return conv(raw)
        except (ValueError, InputError) as exc:
            raise InputError(f"{where(key)}: bad value for {key}: {raw!r} ({exc})") from None

    def pair(text):
        lo, hi = (float(v) for v in text.split(","))
        return lo, hi

    try:
        ship = ShipSpec(
            length=get("ship_length", float), beam=get("ship_beam", float),
            draught=get("ship_draught", float), service_speed=get("ship_speed", float),
            footprint_factor=get("footprint_factor", float),
            depth_clearance=get("depth_clearance", float, True),
            domain_radius_factor=get("domain_radius_factor", float),
        )
        policies = tuple(p.strip() for p in values["policies"].split(",") if p.strip())
        for p in policies:
            if p not in POLICY_KINDS:
                raise InputError(f"{where('policies')}: unknown policy {p!r}")
        planner = PlannerConfig(
            policy=DomainPolicy(
                kind=policies[0], base_radius=get("base_radius", float, True),
                growth_rate=get("growth_rate", float), radius_bounds=get("radius_bounds", pair, True),
                min_radius=get("min_radius", float, True),
            ),
            sectors=get("sectors", int), points_per_sector=get("points_per_sector", int),
            max_points=get("max_points", int, True), xi=get("xi", float), psi=get("psi", float),
        )
        base = GaConfig(
            population_size=get("population", int), elite_count=get("elites", int),
            mutation_prob=get("mutation", float), crossover_prob=get("crossover", float),
            replenish_threshold=get("replenish_threshold", int, True),
            generations=get("generations", int), planner=planner,
            crossover=values["crossover_operator"], planner_retries=get("planner_retries", int),
        )
        islands = IslandSetConfig.uniform(
            get("islands", int), base, master_seed=get("seed", int), policies=policies,
            migration_epoch=get("epoch", int), migration_pairs_per_island=get("migration_pairs", int, True),
        )
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(f"{source}: invalid configuration: {exc}") from None
    return RunConfig(
        islands, ship, get("workers", int, True),
        get("start", parse_point, True), get("dest", parse_point, True), name,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    return build_config(read_config_text(text, str(path)), path.stem)


# -- reports -------------------------------------------------------------------

@dataclass
class RunReport:
    route_length: float
    arrival_time: float
    waypoint_count: int
    wall_time: float
    generations: int
    best_cost: list[float] = field(default_factory=list)
    mean_cost: list[float] = field(default_factory=list)
    seed: int = 0

    @classmethod
    def from_result(cls, result: IslandResult, wall_time: float, generations: int, seed: int) -> "RunReport":
        best = np.min([h[:, 0] for h in result.histories], axis=0)
        return cls(
            route_length=result.best.length(),
            arrival_time=result.best.arrival_time,
            waypoint_count=len(result.best),
            wall_time=wall_time,
            generations=generations,
            best_cost=[float(v) for v in best],
            mean_cost=[float(v) for v in result.mean_cost_series()],
            seed=seed,
        )


def straight_line_blocked(grid: DepthGrid, start: Point, dest: Point) -> bool:
    """True when the bare segment start -> dest crosses land or leaves the map."""
    n = max(2, int(math.ceil(math.dist(start, dest) / (grid.cell_size / 4))))
    for t in np.linspace(0.0, 1.0, n + 1):
        p = Point(start[0] + t * (dest[0] - start[0]), start[1] + t * (dest[1] - start[1]))
        if not grid.contains(p) or depthmap.depth_at(grid, p) <= 0:
            return True
    return False


# -- commands --------------------------------------------------------------------

def cmd_genmap(archetype: str, out_path, size: float | None = None, deep: float = 20.0,
               island_count: int = 40, seed: int = 0, slats: int = 2) -> tuple[DepthGrid, Point, Point, int]:
    """Write a synthetic map. Returns the grid, its canonical endpoints and the
    seed actually used (islands maps skip seeds that leave the straight line open)."""
    if archetype == "wall":
        size = size or 500.0
        grid = depthmap.gen_wall_map(size, deep)
    elif archetype == "labyrinth":
        size = size or 500.0
        grid = depthmap.gen_labyrinth_map(size, deep, slats)
    elif archetype == "islands":
        size = size or 20000.0
        start, dest = archetype_endpoints("islands", size)
        for used in range(seed, seed + GENMAP_RETRIES):
            grid = depthmap.gen_islands_map(size, deep, island_count, used)
            if island_count == 0 or straight_line_blocked(grid, start, dest):
                break
        else:
            raise InputError(f"no seed in [{seed}, {seed + GENMAP_RETRIES}) blocks the straight line")
        seed = used
    elif archetype == "open":
        size = size or 500.0
        grid = depthmap.gen_open_map(size, deep)
    else:
        raise InputError(f"unknown archetype {archetype!r}")
    start, dest = archetype_endpoints(archetype, size, slats)
    save_map(grid, out_path)
    return grid, start, dest, seed


def _resolve_endpoints(cfg: RunConfig, start, dest) -> tuple[Point, Point]:
    start = start or cfg.start
    dest = dest or cfg.dest
    if start is None or dest is None:
        raise InputError("start and destination must be given (command line or config keys start/dest)")
    return start, dest


def cmd_plan(map_path, config_path, start: Point | None, dest: Point | None,
             out_route_path, report_path=None, cfg: RunConfig | None = None) -> RunReport:
    grid = _load_grid(map_path)
    cfg = cfg or load_config(config_path)
    start, dest = _resolve_endpoints(cfg, start, dest)
    for p in (start, dest):
        if not grid.contains(p):
            raise InputError(f"point {tuple(p)} lies outside the map extent {grid.extent}")
    t0 = time.perf_counter()
    result = run_islands(cfg.islands, cfg.ship, grid, start, dest, workers=cfg.workers)
    elapsed = time.perf_counter() - t0
    report = RunReport.from_result(result, elapsed, cfg.islands.shared_generations, cfg.islands.seed)
    save_route(result.best, out_route_path)
    if report_path is not None:
        Path(report_path).write_text(json.dumps(asdict(report), indent=2) + "\n")
    return report


BENCH_FIELDS = ("config", "runs", "failures", "min_length_m", "max_length_m", "mean_length_m",
                "min_time_s", "max_time_s", "mean_time_s")


def aggregate(name: str, reports: list[RunReport], failures: int) -> dict:
    lengths = [r.route_length for r in reports]
    times = [r.wall_time for r in reports]
    row = {"config": name, "runs": len(reports) + failures, "failures": failures}
    for key, vals in (("length_m", lengths), ("time_s", times)):
        row[f"min_{key}"] = min(vals) if vals else math.nan
        row[f"max_{key}"] = max(vals) if vals else math.nan
        row[f"mean_{key}"] = float(np.mean(vals)) if vals else math.nan
    return row


def cmd_bench(map_path, config_paths, runs: int, out_csv, start=None, dest=None,
              work_dir=None) -> tuple[list[dict], dict[str, list[RunReport]]]:
    """Repeat ``cmd_plan`` with seeds base..base+runs-1 per config and write
    one aggregate CSV row per config."""
    if runs < 1:
        raise InputError(f"runs must be >= 1, got {runs}")
    if isinstance(config_paths, (str, Path)):
        config_paths = [config_paths]
    grid = _load_grid(map_path)
    rows, per_run = [], {}
    for path in config_paths:
        cfg = load_config(path)
        s, d = _resolve_endpoints(cfg, start, dest)
        reports, failures = [], 0
        for k in range(runs):
            seeded = cfg.with_seed(cfg.islands.seed + k)
            t0 = time.perf_counter()
            try:
                result = run_islands(seeded.islands, seeded.ship, grid, s, d, workers=seeded.workers)
            except RouteNotFound:
                failures += 1
                continue
            report = RunReport.from_result(result, time.perf_counter() - t0,
                                           seeded.islands.shared_generations, seeded.islands.seed)
            reports.append(report)
            if work_dir is not None:
                Path(work_dir, f"{cfg.name}_run{k}.json").write_text(json.dumps(asdict(report)) + "\n")
        rows.append(aggregate(cfg.name, reports, failures))
        per_run[cfg.name] = reports
    with open(out_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return rows, per_run


def _shade(depth: float, deep: float) -> str:
    if depth <= 0:
        return "#c8b88a"
    level = min(1.0, depth / deep) if deep > 0 else 1.0
    level = round(level * 7) / 7  # 8 shading bands keep the SVG small
    r, g, b = (int(round(a + (z - a) * level)) for a, z in ((198, 16), (228, 70), (247, 140)))
    return f"#{r:02x}{g:02x}{b:02x}"


def render_svg(grid: DepthGrid, route: Route | None, max_blocks: int = 160) -> str:
    w, h = grid.extent
    scale = 800.0 / max(w, h)
    step = max(1, math.ceil((max(grid.width_cells, grid.height_cells) - 1) / max_blocks))
    deep = float(grid.depths.max())
    W, H = w * scale, h * scale
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.1f}" height="{H + 40:.1f}" '
        f'viewBox="0 0 {W:.1f} {H + 40:.1f}">',
        '<g id="depth" shape-rendering="crispEdges">',
    ]
    # one rect per run of equal shading along each block row, y flipped to north-up
    for j0 in range(0, grid.height_cells - 1, step):
        j1 = min(j0 + step, grid.height_cells - 1)
        row_colors = []
        for i0 in range(0, grid.width_cells - 1, step):
            i1 = min(i0 + step, grid.width_cells - 1)
            block = grid.depths[j0:j1 + 1, i0:i1 + 1]
            row_colors.append((i0, i1, _shade(float(block.min()), deep)))
        k = 0
        while k < len(row_colors):
            i0, i1, color = row_colors[k]
            while k + 1 < len(row_colors) and row_colors[k + 1][2] == color:
                k += 1
                i1 = row_colors[k][1]
            x = i0 * grid.cell_size * scale
            y = H - j1 * grid.cell_size * scale
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{(i1 - i0) * grid.cell_size * scale:.2f}" '
                       f'height="{(j1 - j0) * grid.cell_size * scale:.2f}" fill="{color}"/>')
            k += 1
    out.append("</g>")
    if route is not None:
        pts = " ".join(f"{x * scale:.2f},{H - y * scale:.2f}" for x, y in route.xy)
        out.append(f'<polyline id="route" points="{pts}" fill="none" stroke="#d62728" stroke-width="2"/>')
        for (x, y), color, label in ((route.xy[0], "#2ca02c", "start"), (route.xy[-1], "#d62728", "destination")):
            out.append(f'<circle id="{label}" cx="{x * scale:.2f}" cy="{H - y * scale:.2f}" r="5" fill="{color}"/>')
    bar = 10 ** math.floor(math.log10(max(w, h) / 4))
    out.append(f'<line x1="10" y1="{H + 25:.1f}" x2="{10 + bar * scale:.2f}" y2="{H + 25:.1f}" stroke="black" stroke-width="2"/>')
    out.append(f'<text x="{15 + bar * scale:.2f}" y="{H + 30:.1f}" font-size="12">{bar:g} m</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_render(map_path, route_path, out_svg) -> str:
    grid = _load_grid(map_path)
    route = None
    if route_path is not None:
        try:
            route = load_route(route_path)
        except OSError as exc:
            raise InputError(f"cannot read route {route_path}: {exc.strerror}") from None
    svg = render_svg(grid, route)
    Path(out_svg).write_text(svg, encoding="ascii")
    return svg


def _load_grid(path) -> DepthGrid:
    try:
        return load_map(path)
    except OSError as exc:
        raise InputError(f"cannot read map {path}: {exc.strerror}") from None
    except MapFormatError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="searoute", description="Grid-free ship route planning with an island-model GA.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genmap", help="write a synthetic DMAP1 depth map")
    p.add_argument("--archetype", required=True, choices=("wall", "labyrinth", "islands", "open"))
    p.add_argument("--size", type=float, help="side length in meters (500 for small maps, 20000 for islands)")
    p.add_argument("--deep", type=float, default=20.0, help="open-water depth in meters")
    p.add_argument("--islands", type=int, default=40, dest="island_count")
    p.add_argument("--slats", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plan", help="plan one route")
    p.add_argument("--map", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--start", type=parse_point)
    p.add_argument("--dest", type=parse_point)
    p.add_argument("--route-out", required=True)
    p.add_argument("--report-out")

    p = sub.add_parser("bench", help="repeat seeded runs and aggregate route length / compute time")
    p.add_argument("--map", required=True)
    p.add_argument("--config", required=True, action="append")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--start", type=parse_point)
    p.add_argument("--dest", type=parse_point)
    p.add_argument("--out", required=True)
    p.add_argument("--reports-dir", help="also write one JSON report per run here")

    p = sub.add_parser("render", help="draw a map and optional route as SVG")
    p.add_argument("--map", required=True)
    p.add_argument("--route")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "genmap":
            grid, start, dest, seed = cmd_genmap(args.archetype, args.out, args.size, args.deep,
                                                 args.island_count, args.seed, args.slats)
            w, h = grid.extent
            print(f"wrote {args.out}: {w:g} x {h:g} m, start {start.x:g},{start.y:g} dest {dest.x:g},{dest.y:g} seed {seed}")
        elif args.command == "plan":
            report = cmd_plan(args.map, args.config, args.start, args.dest, args.route_out, args.report_out)
            print(f"route: {report.waypoint_count} waypoints, {report.route_length:.1f} m, "
                  f"arrival {report.arrival_time:.1f} s, computed in {report.wall_time:.2f} s")
        elif args.command == "bench":
            Path(args.reports_dir).mkdir(parents=True, exist_ok=True) if args.reports_dir else None
            rows, _ = cmd_bench(args.map, args.config, args.runs, args.out, args.start, args.dest, args.reports_dir)
            for row in rows:
                print(f"{row['config']}: length min/mean/max {row['min_length_m']:.1f}/{row['mean_length_m']:.1f}/"
                      f"{row['max_length_m']:.1f} m, mean time {row['mean_time_s']:.2f} s, failures {row['failures']}")
        elif args.command == "render":
            cmd_render(args.map, args.route, args.out)
    except RouteNotFound as exc:
        print(f"no route: {exc}", file=sys.stderr)
        return EXIT_NO_ROUTE
    except (InputError, RouteStructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
