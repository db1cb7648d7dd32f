"""Island-model parallel GA.

Several independently configured GA instances evolve side by side. Every
``migration_epoch`` generations all islands stop at a barrier; then each island
in turn (the "first" of a pair) is crossed with a randomly drawn other island
acting as donor. The offspring join the first island's population and compete
in its next selection step. Donors only lend copies of their individuals.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .depthmap import DepthGrid
from .ga import CrossoverError, GaConfig, Individual, Population, crossover, evolve_generation, initial_population
from .geometry import Point
from .planner import POLICY_KINDS, RouteNotFound, with_policy
from .route import Route, SafetyModel, ShipSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IslandSetConfig:
    islands: tuple[GaConfig, ...]
    migration_epoch: int = 100
    migration_pairs_per_island: int | None = None  # None -> receiving island's elite_count // 2
    shared_generations: int = 300
    seed: int = 0  # seeds the migration stream only; island streams come from their GaConfig

    def __post_init__(self):
        object.__setattr__(self, "islands", tuple(self.islands))
        if not self.islands:
            raise ValueError("at least one island is required")
        if self.migration_epoch < 1:
            raise ValueError(f"migration_epoch must be >= 1, got {self.migration_epoch}")
        if self.shared_generations < 0:
            raise ValueError("shared_generations must be >= 0")

    @classmethod
    def uniform(
        cls, n_islands: int | None = None, base: GaConfig | None = None, master_seed: int = 0,
        policies: tuple[str, ...] = POLICY_KINDS, **kwargs,
    ) -> "IslandSetConfig":
        """``n_islands`` copies of ``base`` (default: one per CPU) cycling through
        ``policies``, with per-island seeds derived from ``master_seed``."""
        n_islands = n_islands or os.cpu_count() or 1
        base = base or GaConfig()
        islands = []
        for i in range(n_islands):
            cfg = replace(base, seed=island_seed(master_seed, i))
            cfg = replace(cfg, planner=with_policy(cfg.planner, policies[i % len(policies)]))
            islands.append(cfg)
        kwargs.setdefault("shared_generations", base.generations)
        return cls(tuple(islands), seed=master_seed, **kwargs)

    def pairs_for(self, island: GaConfig) -> int:
        if self.migration_pairs_per_island is not None:
            return self.migration_pairs_per_island
        return max(1, island.elite_count // 2)


def island_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def migration_rng(master_seed: int) -> np.random.Generator:
    # the extra word keeps this stream distinct from every island_seed()
    return np.random.default_rng([master_seed, 0x6D696772])


@dataclass
class IslandState:
    cfg: GaConfig
    rng: np.random.Generator
    population: Population | None = None
    history: list = field(default_factory=list)


@dataclass
class IslandResult:
    best: Route
    best_cost: float
    best_island: int
    histories: list[np.ndarray]  # per island, (shared_generations + 1, 2) best/mean cost

    def mean_cost_series(self) -> np.ndarray:
        """Population mean cost per generation, averaged over islands."""
        return np.mean([h[:, 1] for h in self.histories], axis=0)


def inter_island_crossover(
    first: Population, donor: Population, first_cfg: GaConfig, rng: np.random.Generator,
    ship: ShipSpec, grid: DepthGrid, pairs: int = 1, safety: SafetyModel | None = None,
) -> Population:
    """Cross random (first, donor) individual pairs with the first island's
    crossover operator and return the first population grown by the offspring.
    ``donor`` is left untouched."""
    if not first.individuals or not donor.individuals:
        raise ValueError("both populations must be non-empty")
    safety = safety or SafetyModel(ship, grid)
    grown = list(first.individuals)
    for _ in range(pairs):
        a = first.individuals[int(rng.integers(len(first)))].route
        b = donor.individuals[int(rng.integers(len(donor)))].route
        try:
            children = crossover(first_cfg.crossover, a, b, rng, ship)
        except CrossoverError:
            continue
        grown.extend(Individual(c, safety.cost(c)) for c in children)
    return Population(grown, first.generation_index)


# -- workers -------------------------------------------------------------------

_worker: dict = {}


def _init_worker(ship: ShipSpec, grid: DepthGrid, start: Point, dest: Point):
    _worker.update(ship=ship, grid=grid, start=start, dest=dest, safety=SafetyModel(ship, grid))


def _advance(state: IslandState, generations: int) -> IslandState:
    ship, grid, safety = _worker["ship"], _worker["grid"], _worker["safety"]
    if state.population is None:
        try:
            state.population = initial_population(
                state.cfg, ship, grid, _worker["start"], _worker["dest"], state.rng, safety
            )
        except RouteNotFound:
            logger.warning("island with %s policy produced no initial route", state.cfg.planner.policy.kind)
            return state
        state.history.append(state.population.stats())
    for _ in range(generations):
        state.population = evolve_generation(state.population, state.cfg, ship, grid, state.rng, safety)
        state.history.append(state.population.stats())
    return state


class _InlinePool:
    def __init__(self, initargs):
        _init_worker(*initargs)

    def map(self, fn, *iterables):
        return map(fn, *iterables)

    def shutdown(self):
        pass


def run_islands(
    cfg: IslandSetConfig, ship: ShipSpec, grid: DepthGrid, start: Point, dest: Point,
    workers: int | None = None,
) -> IslandResult:
    """Evolve all islands for ``shared_generations`` with barrier-synchronised
    migration epochs. Results do not depend on ``workers``."""
    start, dest = Point(float(start[0]), float(start[1])), Point(float(dest[0]), float(dest[1]))
    n = len(cfg.islands)
    workers = min(n, workers or os.cpu_count() or 1)
    initargs = (ship, grid, start, dest)
    pool = _InlinePool(initargs) if workers <= 1 else ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=initargs
    )
    states = [IslandState(c, np.random.default_rng(c.seed)) for c in cfg.islands]
    mig_rng = migration_rng(cfg.seed)
    safety = SafetyModel(ship, grid)
    try:
        states = list(pool.map(_advance, states, [0] * n))
        if all(s.population is None for s in states):
            raise RouteNotFound("no-route", "no island produced an initial route")
        done = 0
        while done < cfg.shared_generations:
            chunk = min(cfg.migration_epoch - done % cfg.migration_epoch, cfg.shared_generations - done)
            states = list(pool.map(_advance, states, [chunk] * n))
            done += chunk
            if done % cfg.migration_epoch == 0 and done < cfg.shared_generations:
                _migrate(states, cfg, mig_rng, ship, grid, safety)
                logger.info("migration after generation %d", done)
    finally:
        pool.shutdown()

    live = [k for k, s in enumerate(states) if s.population is not None]
    if not live:
        raise RouteNotFound("no-route", "every island died out")
    best_k = min(live, key=lambda k: states[k].population.best().cost)
    best = states[best_k].population.best()
    histories = [np.array(s.history) for s in states if s.population is not None]
    return IslandResult(best.route, best.cost, best_k, histories)


def _migrate(states, cfg: IslandSetConfig, rng, ship, grid, safety):
    # donors lend their pre-migration populations so the outcome does not
    # depend on the order in which islands receive offspring
    snapshot = [s.population for s in states]
    n = len(states)
    if n < 2:
        return
    for i, state in enumerate(states):
        j = int(rng.integers(n - 1))
        j += j >= i
        if state.population is None or snapshot[j] is None:
            continue
        state.population = inter_island_crossover(
            state.population, snapshot[j], state.cfg, rng, ship, grid, cfg.pairs_for(state.cfg), safety
        )
