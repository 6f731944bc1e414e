"""2D parking-lot world: static map, waypoint routing, kinematic stepping,
collision detection, ground-truth pose publication."""

from avpsim.world.geometry import (
    OrientedRect,
    Pose2,
    normalize_angle,
    oriented_rect_overlap,
)
from avpsim.world.lotmap import LotMap, MapError, SpotRegion, load_map, load_map_file
from avpsim.world.routing import BayGoal, Goal, RoutingError, SpotGoal, plan_route
from avpsim.world.sim import Collision, GoalReached, VehicleBody, World

__all__ = [
    "BayGoal",
    "Collision",
    "Goal",
    "GoalReached",
    "LotMap",
    "MapError",
    "OrientedRect",
    "Pose2",
    "RoutingError",
    "SpotGoal",
    "SpotRegion",
    "VehicleBody",
    "World",
    "load_map",
    "load_map_file",
    "normalize_angle",
    "oriented_rect_overlap",
    "plan_route",
]
