"""Waypoint routing: snap to the nearest node, Dijkstra to the goal's
approach node, then the goal's final pose. Ties break toward smaller node
ids so routes are deterministic."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from avpsim.world.geometry import Pose2, normalize_angle
from avpsim.world.lotmap import LotMap, SpotApproach

SNAP_DISTANCE_M = 5.0
ARRIVAL_TOLERANCE_M = 0.15


class RoutingError(Exception):
    """No route exists under the map and snapping constraints."""


@dataclass(frozen=True)
class SpotGoal:
    spot_id: int


@dataclass(frozen=True)
class BayGoal:
    bay: str  # "dropoff" or "pickup"


Goal = SpotGoal | BayGoal


def dijkstra(lot: LotMap, src: int, dst: int) -> tuple[list[int], float]:
    """Shortest node path and its cost; ties broken by smaller node id."""
    dist: dict[int, float] = {src: 0.0}
    prev: dict[int, int] = {}
    heap: list[tuple[float, int]] = [(0.0, src)]
    done: set[int] = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == dst:
            break
        for nxt, w in lot.adjacency[node]:
            nd = d + w
            if nd < dist.get(nxt, math.inf) - 1e-12:
                dist[nxt] = nd
                prev[nxt] = node
                heapq.heappush(heap, (nd, nxt))
    if dst not in dist or dst not in done:
        raise RoutingError(f"node {dst} unreachable from {src}")
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    path.reverse()
    return path, dist[dst]


def _approach(lot: LotMap, goal: Goal) -> SpotApproach:
    if isinstance(goal, SpotGoal):
        try:
            return lot.spot_approach[goal.spot_id]
        except KeyError:
            raise RoutingError(f"no approach for spot {goal.spot_id}") from None
    if goal.bay not in ("dropoff", "pickup"):
        raise RoutingError(f"unknown bay {goal.bay!r}")
    return lot.bay_approach(goal.bay)


def plan_route(
    lot: LotMap,
    start: Pose2,
    goal: Goal,
    snap_m: float = SNAP_DISTANCE_M,
) -> list[Pose2]:
    """Pose path from `start` to the goal's final pose. Always nonempty.

    Waypoint poses face the direction of travel; the final pose is the
    goal's. The leading waypoint is dropped when the start already sits on
    it (within the arrival tolerance).
    """
    approach = _approach(lot, goal)
    snap_node, snap_dist = lot.nearest_node(start.x, start.y)
    if snap_dist > snap_m:
        raise RoutingError(
            f"start ({start.x:.2f}, {start.y:.2f}) is {snap_dist:.2f} m from the nearest "
            f"waypoint, beyond the {snap_m} m snapping distance"
        )
    node_path, _ = dijkstra(lot, snap_node, approach.node)

    first = lot.nodes[node_path[0]]
    if math.hypot(first[0] - start.x, first[1] - start.y) <= ARRIVAL_TOLERANCE_M:
        node_path = node_path[1:]

    poses: list[Pose2] = []
    prev_xy = (start.x, start.y)
    for nid in node_path:
        x, y = lot.nodes[nid]
        yaw = normalize_angle(math.atan2(y - prev_xy[1], x - prev_xy[0]))
        poses.append(Pose2(x, y, yaw))
        prev_xy = (x, y)
    poses.append(approach.final)
    return poses
