import math
from collections import Counter

import numpy as np
import pytest

from searoute import depthmap
from searoute.ga import (
    MUTATIONS, CrossoverError, GaConfig, Individual, Population, choose_mutation, closest_interior_pair,
    crossover_long, crossover_short, evolve_generation, initial_population, mutate, mutate_delete,
    mutate_insert, mutate_move, run,
)
from searoute.geometry import Point, distance
from searoute.planner import PlannerConfig, RouteNotFound
from searoute.route import Route, SafetyModel, ShipSpec, recompute_timing, route_cost, route_is_safe

from oracles import brute_closest_pair

START, DEST = Point(100, 100), Point(400, 400)


def _route(points, ship=ShipSpec()):
    return recompute_timing(Route.from_points(points), ship)


def _random_route(rng, n):
    inner = rng.uniform(0, 500, size=(n - 2, 2))
    return Route(np.vstack([START, inner, DEST]))


def test_config_validation():
    for bad in (dict(elite_count=0), dict(elite_count=21), dict(mutation_prob=1.5), dict(crossover_prob=-0.1),
                dict(replenish_threshold=21), dict(crossover="middle"), dict(generations=-1)):
        with pytest.raises(ValueError):
            GaConfig(**bad)
    assert GaConfig().threshold == 20 and GaConfig(replenish_threshold=5).threshold == 5


def test_mutate_insert(rng, ship):
    r = _route([START, DEST])
    for _ in range(1000):
        m = mutate_insert(r, ship, rng)
        assert len(m) == 3 and m.start == START and m.dest == DEST
        mid = Point(*m.xy[1])
        assert min(distance(mid, START), distance(mid, DEST)) <= ship.domain_radius + 1e-9
    bigger = _route([START, (200, 150), (300, 330), DEST])
    m = mutate_insert(bigger, ship, rng)
    assert len(m) == 5 and m.arrival_time == pytest.approx(m.length() / ship.service_speed)


def test_mutate_move(rng, ship):
    r = _route([START, (250, 250), DEST])
    for _ in range(1000):
        m = mutate_move(r, ship, rng)
        assert len(m) == 3 and m.start == START and m.dest == DEST
        assert distance(Point(*m.xy[1]), Point(250, 250)) <= ship.domain_radius + 1e-9
    two = _route([START, DEST])
    assert mutate_move(two, ship, rng) is two


def test_mutate_delete(rng, ship):
    r = _route([START, (250, 250), DEST])
    d = mutate_delete(r, ship, rng)
    assert d.points == [START, DEST]
    assert d.arrival_time == pytest.approx(r.arrival_time)  # collinear midpoint removed
    two = _route([START, DEST])
    assert mutate_delete(two, ship, rng) is two


def test_mutation_choice_uniform():
    rng = np.random.default_rng(2)
    counts = Counter(choose_mutation(rng) for _ in range(10_000))
    assert set(counts) == set(MUTATIONS)
    for fn in MUTATIONS:
        assert abs(counts[fn] / 10_000 - 1 / 3) < 0.02


def test_mutate_keeps_endpoints(rng, ship):
    two = _route([START, DEST])
    for _ in range(300):
        m = mutate(two, ship, rng)
        assert m.start == START and m.dest == DEST and len(m) in (2, 3)


def test_crossover_common_point(ship):
    p = (250.0, 260.0)
    a = _route([START, (150, 200), p, (330, 300), DEST])
    b = _route([START, (220, 120), p, DEST])
    o1, o2 = crossover_short(a, b, ship)
    assert closest_interior_pair(a, b) == (2, 2)
    assert Point(*p) in o1.points and Point(*p) in o2.points
    assert o1.points == [START, Point(150, 200), Point(*p), DEST]
    assert o2.points == [START, Point(220, 120), Point(*p), Point(330, 300), DEST]


def test_crossover_short_splice_oracle():
    rng = np.random.default_rng(3)
    for _ in range(300):
        a, b = _random_route(rng, int(rng.integers(3, 9))), _random_route(rng, int(rng.integers(3, 9)))
        i, j = brute_closest_pair(a.xy, b.xy)
        assert closest_interior_pair(a, b) == (i, j)
        o1, o2 = crossover_short(a, b)
        assert np.array_equal(o1.xy, np.vstack([a.xy[: i + 1], b.xy[j + 1:]]))
        assert np.array_equal(o2.xy, np.vstack([b.xy[: j + 1], a.xy[i + 1:]]))


def test_crossover_tie_break():
    a = Route(np.array([START, (200, 200), (200, 200), DEST]))
    b = Route(np.array([START, (200, 200), (200, 200), DEST]))
    assert closest_interior_pair(a, b) == (1, 1)


def test_crossover_long(rng, ship):
    a = _route([START, (200, 150), DEST])
    b = _route([START, (150, 300), DEST])
    o1, o2 = crossover_long(a, b, rng, ship)
    assert o1.points == [START, Point(200, 150), DEST] and o2.points == [START, Point(150, 300), DEST]
    for _ in range(200):
        a, b = _random_route(rng, int(rng.integers(3, 8))), _random_route(rng, int(rng.integers(3, 8)))
        before = (a.xy.copy(), b.xy.copy())
        o1, o2 = crossover_long(a, b, rng)
        assert len(o1) + len(o2) == len(a) + len(b)
        assert o1.start == o2.start == START and o1.dest == o2.dest == DEST
        assert np.array_equal(a.xy, before[0]) and np.array_equal(b.xy, before[1])


def test_crossover_needs_interior(rng):
    a, b = _route([START, DEST]), _route([START, (1, 2), DEST])
    with pytest.raises(CrossoverError):
        crossover_short(a, b)
    with pytest.raises(CrossoverError):
        crossover_long(b, a, rng)


def test_offspring_are_retimed(ship):
    a = _route([START, (150, 200), (300, 320), DEST])
    b = _route([START, (260, 130), (380, 300), DEST])
    for o in crossover_short(a, b, ship):
        assert o.arrival_time == pytest.approx(o.length() / ship.service_speed)


def test_generation_no_operators_keeps_elites(wall_grid, ship):
    start, dest = depthmap.archetype_endpoints("wall", 500.0)
    cfg = GaConfig(mutation_prob=0.0, crossover_prob=0.0)
    rng = np.random.default_rng(1)
    safety = SafetyModel(ship, wall_grid)
    pop = initial_population(cfg, ship, wall_grid, start, dest, rng, safety)
    nxt = evolve_generation(pop, cfg, ship, wall_grid, rng, safety)
    elites = sorted(pop.individuals, key=lambda ind: ind.cost)[:10]
    assert len(nxt) == 20 and nxt.generation_index == 1
    assert all(x is y for x, y in zip(nxt.individuals[:10], elites))


def test_generation_size_and_monotone_best(wall_grid, ship):
    start, dest = depthmap.archetype_endpoints("wall", 500.0)
    cfg = GaConfig(generations=15, mutation_prob=0.5)
    res = run(cfg, ship, wall_grid, start, dest)
    assert res.history.shape == (16, 2)
    assert np.all(np.diff(res.history[:, 0]) <= 0)
    assert np.all(res.history[:, 1] >= res.history[:, 0])
    assert route_is_safe(res.best, ship, wall_grid)
    assert res.best_cost == route_cost(res.best, ship, wall_grid)


def test_unsafe_individuals_never_survive(wall_grid, ship):
    start, dest = depthmap.archetype_endpoints("wall", 500.0)
    cfg = GaConfig(mutation_prob=1.0, crossover_prob=1.0)
    rng = np.random.default_rng(9)
    safety = SafetyModel(ship, wall_grid)
    pop = initial_population(cfg, ship, wall_grid, start, dest, rng, safety)
    for _ in range(5):
        pop = evolve_generation(pop, cfg, ship, wall_grid, rng, safety)
        assert len(pop) == cfg.population_size
        for ind in pop.individuals:
            assert math.isfinite(ind.cost)
            assert ind.route.start == start and ind.route.dest == dest


def test_generations_zero_returns_initial_best(open_grid, ship):
    cfg = GaConfig(generations=0)
    res = run(cfg, ship, open_grid, START, DEST)
    pop = initial_population(cfg, ship, open_grid, START, DEST, np.random.default_rng(cfg.seed))
    assert res.history.shape == (1, 2)
    assert res.best_cost == pop.best().cost


def test_run_deterministic(wall_grid, ship):
    start, dest = depthmap.archetype_endpoints("wall", 500.0)
    cfg = GaConfig(generations=5, seed=3)
    a, b = run(cfg, ship, wall_grid, start, dest), run(cfg, ship, wall_grid, start, dest)
    assert a.best == b.best and np.array_equal(a.history, b.history)


def test_open_map_near_straight_line(open_grid, ship):
    res = run(GaConfig(generations=60, seed=1), ship, open_grid, START, DEST)
    assert res.best_cost <= 1.05 * distance(START, DEST) / ship.service_speed


def test_no_route_raises(ship):
    depths = np.full((101, 101), 20.0)
    depths[:, 50:53] = -2.0  # wall from edge to edge
    g = depthmap.DepthGrid(depths, 5.0)
    with pytest.raises(RouteNotFound):
        run(GaConfig(generations=1, planner_retries=1), ship, g, Point(100, 250), Point(400, 250))


def test_replenish_threshold_respected(open_grid, ship):
    cfg = GaConfig(replenish_threshold=5, mutation_prob=0.0, crossover_prob=0.0)
    rng = np.random.default_rng(0)
    pop = initial_population(cfg, ship, open_grid, START, DEST, rng)
    nxt = evolve_generation(pop, cfg, ship, open_grid, rng)
    assert len(nxt) == cfg.elite_count  # 10 survivors are not below the threshold of 5
