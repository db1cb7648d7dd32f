import numpy as np
import pytest

from searoute import depthmap
from searoute.ga import GaConfig, initial_population, run
from searoute.geometry import Point
from searoute.islands import (
    IslandSetConfig, inter_island_crossover, island_seed, migration_rng, run_islands,
)
from searoute.planner import PlannerConfig, with_policy
from searoute.route import SafetyModel, route_is_safe

WALL = depthmap.archetype_endpoints("wall", 500.0)


def test_config_validation():
    with pytest.raises(ValueError):
        IslandSetConfig(())
    with pytest.raises(ValueError):
        IslandSetConfig((GaConfig(),), migration_epoch=0)
    cfg = IslandSetConfig.uniform(4, GaConfig(generations=7), master_seed=3)
    assert [c.planner.policy.kind for c in cfg.islands] == ["constant", "growing", "random", "min-radius"]
    assert cfg.shared_generations == 7 and cfg.pairs_for(cfg.islands[0]) == 5
    assert len({c.seed for c in cfg.islands}) == 4
    assert IslandSetConfig.uniform(2, GaConfig(), master_seed=3).islands[1].seed == cfg.islands[1].seed


def test_streams_are_distinct():
    seeds = {island_seed(0, i) for i in range(8)} | {island_seed(1, i) for i in range(8)}
    assert len(seeds) == 16
    assert migration_rng(0).random() != migration_rng(1).random()


def _pops(wall_grid, ship, n=2):
    start, dest = WALL
    safety = SafetyModel(ship, wall_grid)
    cfg = GaConfig()
    return [initial_population(cfg, ship, wall_grid, start, dest, np.random.default_rng(k), safety)
            for k in range(n)], cfg, safety


def test_inter_island_crossover_donor_semantics(wall_grid, ship):
    (first, donor), cfg, safety = _pops(wall_grid, ship)
    donor_xy = [ind.route.xy.copy() for ind in donor.individuals]
    donor_costs = [ind.cost for ind in donor.individuals]
    grown = inter_island_crossover(first, donor, cfg, np.random.default_rng(0), ship, wall_grid, 1, safety)
    assert len(grown) == len(first) + 2
    assert grown.individuals[: len(first)] == first.individuals
    assert [ind.cost for ind in donor.individuals] == donor_costs
    assert all(np.array_equal(a.route.xy, b) for a, b in zip(donor.individuals, donor_xy))
    for ind in grown.individuals[len(first):]:
        assert ind.route.start == Point(*WALL[0]) and ind.route.dest == Point(*WALL[1])
        assert ind.cost == safety.cost(ind.route)


def test_inter_island_crossover_many_pairs(wall_grid, ship):
    (first, donor), cfg, safety = _pops(wall_grid, ship)
    grown = inter_island_crossover(first, donor, cfg, np.random.default_rng(1), ship, wall_grid, 5, safety)
    assert len(grown) == len(first) + 10
    with pytest.raises(ValueError):
        inter_island_crossover(first, type(first)([]), cfg, np.random.default_rng(1), ship, wall_grid)


def test_single_island_equals_ga_run(wall_grid, ship):
    start, dest = WALL
    cfg = IslandSetConfig.uniform(1, GaConfig(generations=12), master_seed=5)
    res = run_islands(cfg, ship, wall_grid, start, dest, workers=1)
    ref = run(cfg.islands[0], ship, wall_grid, start, dest)
    assert res.best == ref.best and res.best_cost == ref.best_cost
    assert np.array_equal(res.histories[0], ref.history)


def test_migration_schedule_and_results(wall_grid, ship, monkeypatch):
    from searoute import islands

    calls = []
    real = islands._migrate

    def spy(states, cfg, rng, *args):
        calls.append([s.population.generation_index for s in states])
        before = [len(s.population) for s in states]
        real(states, cfg, rng, *args)
        # every island receives offspring as the first of its pair
        assert all(len(s.population) > b for s, b in zip(states, before))

    monkeypatch.setattr(islands, "_migrate", spy)
    start, dest = WALL
    cfg = IslandSetConfig.uniform(4, GaConfig(generations=30), master_seed=2, migration_epoch=10)
    res = run_islands(cfg, ship, wall_grid, start, dest, workers=1)
    assert calls == [[10] * 4, [20] * 4]
    assert len(res.histories) == 4 and all(h.shape == (31, 2) for h in res.histories)
    assert all(np.all(np.diff(h[:, 0]) <= 0) for h in res.histories)
    assert res.best_cost <= min(h[-1, 0] for h in res.histories)
    assert route_is_safe(res.best, ship, wall_grid)


def test_deterministic_regardless_of_workers(wall_grid, ship):
    start, dest = WALL
    cfg = IslandSetConfig.uniform(3, GaConfig(generations=6), master_seed=8, migration_epoch=3)
    a = run_islands(cfg, ship, wall_grid, start, dest, workers=1)
    b = run_islands(cfg, ship, wall_grid, start, dest, workers=3)
    assert a.best == b.best and a.best_island == b.best_island
    assert all(np.array_equal(x, y) for x, y in zip(a.histories, b.histories))


def test_heterogeneous_islands(labyrinth_grid, ship):
    start, dest = depthmap.archetype_endpoints("labyrinth", 500.0)
    base = GaConfig(generations=8)
    islands = (
        base,
        GaConfig(population_size=12, elite_count=4, crossover="long", generations=8,
                 planner=with_policy(PlannerConfig(sectors=6, points_per_sector=5), "growing"), seed=9),
    )
    res = run_islands(IslandSetConfig(islands, migration_epoch=4, shared_generations=8), ship,
                      labyrinth_grid, start, dest, workers=1)
    assert route_is_safe(res.best, ship, labyrinth_grid)
    assert res.mean_cost_series().shape == (9,)
