"""Variable-length genetic algorithm over complete routes.

Individuals are whole routes. Mutation inserts, moves or deletes an interior
waypoint; crossover splices two routes at an interior waypoint pair. Each
generation keeps the ``elite_count`` cheapest routes and tops the population
back up with fresh planner routes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .depthmap import DepthGrid
from .geometry import Point, sample_in_disc
from .planner import PlannerConfig, RouteNotFound, plan_route
from .route import UNSAFE_COST, Route, SafetyModel, ShipSpec, retime_or_flag

logger = logging.getLogger(__name__)

CROSSOVER_KINDS = ("short", "long")


class CrossoverError(ValueError):
    """A parent has no interior waypoint to split at."""


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    elite_count: int = 10
    mutation_prob: float = 0.1
    crossover_prob: float = 0.5
    replenish_threshold: int | None = None  # None -> population_size (always top up)
    generations: int = 300
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    seed: int = 0
    crossover: str = "short"
    planner_retries: int = 3

    def __post_init__(self):
        if not 0 < self.elite_count <= self.population_size:
            raise ValueError(f"need 0 < elite_count <= population_size, got {self.elite_count}/{self.population_size}")
        for name in ("mutation_prob", "crossover_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability, got {getattr(self, name)}")
        if self.replenish_threshold is not None and self.replenish_threshold > self.population_size:
            raise ValueError("replenish_threshold cannot exceed population_size")
        if self.crossover not in CROSSOVER_KINDS:
            raise ValueError(f"unknown crossover {self.crossover!r}; expected one of {CROSSOVER_KINDS}")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")

    @property
    def threshold(self) -> int:
        return self.population_size if self.replenish_threshold is None else self.replenish_threshold


@dataclass
class Individual:
    route: Route
    cost: float


@dataclass
class Population:
    individuals: list[Individual]
    generation_index: int = 0

    def __len__(self):
        return len(self.individuals)

    def best(self) -> Individual:
        return min(self.individuals, key=lambda ind: ind.cost)

    def stats(self) -> tuple[float, float]:
        costs = np.array([ind.cost for ind in self.individuals])
        return float(costs.min()), float(costs.mean())


@dataclass
class GaResult:
    best: Route
    best_cost: float
    history: np.ndarray  # (generations + 1, 2): best and mean cost per generation


# -- mutation --------------------------------------------------------------------

def mutate_insert(route: Route, ship: ShipSpec, rng: np.random.Generator) -> Route:
    """Add a waypoint drawn from the domain disc of a random existing waypoint,
    spliced into a random edge."""
    n = len(route)
    anchor = route.xy[rng.integers(n)]
    p = sample_in_disc(Point(*anchor), ship.domain_radius, rng)
    edge = int(rng.integers(n - 1))
    xy = np.insert(route.xy, edge + 1, p, axis=0)
    speeds = np.insert(route.speeds, edge + 1, route.speeds[edge])
    radius = np.insert(route.turn_radius, edge + 1, 0.0)
    return retime_or_flag(Route(xy, speeds, turn_radius=radius), ship)


def mutate_move(route: Route, ship: ShipSpec, rng: np.random.Generator) -> Route:
    n = len(route)
    if n < 3:
        return route
    k = int(rng.integers(1, n - 1))
    xy = route.xy.copy()
    xy[k] = sample_in_disc(Point(*xy[k]), ship.domain_radius, rng)
    return retime_or_flag(Route(xy, route.speeds.copy(), turn_radius=route.turn_radius.copy()), ship)


def mutate_delete(route: Route, ship: ShipSpec, rng: np.random.Generator) -> Route:
    n = len(route)
    if n < 3:
        return route
    keep = np.ones(n, dtype=bool)
    keep[int(rng.integers(1, n - 1))] = False
    return retime_or_flag(route.take(keep), ship)


MUTATIONS: tuple[Callable, ...] = (mutate_insert, mutate_move, mutate_delete)


def choose_mutation(rng: np.random.Generator) -> Callable:
    return MUTATIONS[int(rng.integers(len(MUTATIONS)))]


def mutate(route: Route, ship: ShipSpec, rng: np.random.Generator) -> Route:
    """Apply one of the three mutations, picked with equal probability."""
    return choose_mutation(rng)(route, ship, rng)


# -- crossover -------------------------------------------------------------------

def _require_interior(a: Route, b: Route):
    if len(a) < 3 or len(b) < 3:
        raise CrossoverError(f"crossover needs interior waypoints (got {len(a)} and {len(b)} points)")


def _splice(a: Route, b: Route, i: int, j: int, ship: ShipSpec | None):
    o1 = Route.concat(a, i, b, j + 1)
    o2 = Route.concat(b, j, a, i + 1)
    if ship is not None:
        o1, o2 = retime_or_flag(o1, ship), retime_or_flag(o2, ship)
    return o1, o2


def closest_interior_pair(a: Route, b: Route) -> tuple[int, int]:
    """Indices of the closest (interior of a, interior of b) waypoint pair;
    ties go to the smallest i, then the smallest j."""
    _require_interior(a, b)
    pa, pb = a.xy[1:-1], b.xy[1:-1]
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    i, j = np.unravel_index(int(np.argmin(d2)), d2.shape)
    return int(i) + 1, int(j) + 1


def crossover_short(a: Route, b: Route, ship: ShipSpec | None = None) -> tuple[Route, Route]:
    """Split both parents where they come closest and swap the tails.

    Start and destination are never split points. With ``ship`` given the
    offspring are retimed.
    """
    i, j = closest_interior_pair(a, b)
    return _splice(a, b, i, j, ship)


def crossover_long(a: Route, b: Route, rng: np.random.Generator, ship: ShipSpec | None = None) -> tuple[Route, Route]:
    _require_interior(a, b)
    i = int(rng.integers(1, len(a) - 1))
    j = int(rng.integers(1, len(b) - 1))
    return _splice(a, b, i, j, ship)


def crossover(kind: str, a: Route, b: Route, rng: np.random.Generator, ship: ShipSpec) -> tuple[Route, Route]:
    if kind == "short":
        return crossover_short(a, b, ship)
    return crossover_long(a, b, rng, ship)


# -- population ----------------------------------------------------------------

def _evaluate(route: Route, safety: SafetyModel) -> Individual:
    return Individual(route, safety.cost(route))


def _fresh_route(cfg: GaConfig, start, dest, safety: SafetyModel, rng, attempts: int) -> Route | None:
    for _ in range(attempts):
        try:
            return plan_route(start, dest, safety.ship, safety.grid, cfg.planner, rng=rng, safety=safety)
        except RouteNotFound:
            continue
    return None


def initial_population(
    cfg: GaConfig, ship: ShipSpec, grid: DepthGrid, start: Point, dest: Point,
    rng: np.random.Generator, safety: SafetyModel | None = None,
) -> Population:
    """``population_size`` planner routes. Slots the planner cannot fill are
    cloned from successful ones; raises :class:`RouteNotFound` when none succeed."""
    safety = safety or SafetyModel(ship, grid)
    routes: list[Route | None] = [
        _fresh_route(cfg, start, dest, safety, rng, cfg.planner_retries) for _ in range(cfg.population_size)
    ]
    found = [r for r in routes if r is not None]
    if not found:
        raise RouteNotFound("no-route", "planner produced no safe route for the initial population")
    for k, r in enumerate(routes):
        if r is None:
            routes[k] = found[int(rng.integers(len(found)))]
    return Population([_evaluate(r, safety) for r in routes], 0)


def evolve_generation(
    pop: Population, cfg: GaConfig, ship: ShipSpec, grid: DepthGrid,
    rng: np.random.Generator, safety: SafetyModel | None = None,
) -> Population:
    """One generation: crossover, mutation, evaluation, truncation selection and
    planner replenishment."""
    safety = safety or SafetyModel(ship, grid)
    pool = list(pop.individuals)
    start, dest = pool[0].route.start, pool[0].route.dest

    # crossover: offspring join the pool, parents stay
    marked = [k for k in range(len(pool)) if rng.random() < cfg.crossover_prob]
    marked = [marked[k] for k in rng.permutation(len(marked))]
    for k in range(0, len(marked) - 1, 2):
        a, b = pool[marked[k]].route, pool[marked[k + 1]].route
        try:
            children = crossover(cfg.crossover, a, b, rng, ship)
        except CrossoverError:
            continue
        pool.extend(Individual(c, math.nan) for c in children)

    # mutation replaces individuals; the incumbent best keeps a copy of itself
    incumbent = min(range(len(pop.individuals)), key=lambda k: pop.individuals[k].cost)
    for k in range(len(pool)):
        if rng.random() < cfg.mutation_prob:
            mutant = Individual(mutate(pool[k].route, ship, rng), math.nan)
            if k == incumbent:
                pool.append(mutant)
            else:
                pool[k] = mutant

    for ind in pool:
        if math.isnan(ind.cost):
            ind.cost = safety.cost(ind.route)

    order = sorted(range(len(pool)), key=lambda k: pool[k].cost)
    survivors = [pool[k] for k in order[: cfg.elite_count] if math.isfinite(pool[k].cost)]

    if len(survivors) < cfg.threshold:
        fresh = []
        for _ in range(cfg.population_size - len(survivors)):
            route = _fresh_route(cfg, start, dest, safety, rng, cfg.planner_retries)
            if route is not None:
                fresh.append(_evaluate(route, safety))
            elif survivors:
                clone = survivors[int(rng.integers(len(survivors)))]
                fresh.append(Individual(clone.route, clone.cost))
            else:
                raise RouteNotFound("no-route", "population died out and the planner cannot replenish it")
        survivors = survivors + fresh
    if not survivors:
        raise RouteNotFound("no-route", "no safe individual survived selection")
    return Population(survivors, pop.generation_index + 1)


def run(
    cfg: GaConfig, ship: ShipSpec, grid: DepthGrid, start: Point, dest: Point,
    rng: np.random.Generator | None = None, safety: SafetyModel | None = None,
) -> GaResult:
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    safety = safety or SafetyModel(ship, grid)
    pop = initial_population(cfg, ship, grid, start, dest, rng, safety)
    history = [pop.stats()]
    for _ in range(cfg.generations):
        pop = evolve_generation(pop, cfg, ship, grid, rng, safety)
        history.append(pop.stats())
    best = pop.best()
    return GaResult(best.route, best.cost, np.array(history))
