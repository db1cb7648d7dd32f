"""Grid-free ship route planning: a sampling-based route constructor seeding an
island-model genetic algorithm, over continuous depth maps."""

from .depthmap import DepthGrid, load_map, save_map
from .ga import GaConfig, GaResult, run
from .geometry import OrientedRect, Point
from .islands import IslandResult, IslandSetConfig, run_islands
from .planner import DomainPolicy, PlannerConfig, RouteNotFound, plan_route
from .route import Route, SafetyModel, ShipSpec, route_cost, route_is_safe

__all__ = [
    "DepthGrid", "DomainPolicy", "GaConfig", "GaResult", "IslandResult", "IslandSetConfig",
    "OrientedRect", "PlannerConfig", "Point", "Route", "RouteNotFound", "SafetyModel", "ShipSpec",
    "load_map", "plan_route", "route_cost", "route_is_safe", "run", "run_islands", "save_map",
]
__version__ = "0.1.0"
