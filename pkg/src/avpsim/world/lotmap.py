"""Static lot map: spot rectangles, bays, spawn points, waypoint graph.

Loaded from a JSON document; validation rejects duplicate spot IDs,
disconnected waypoint graphs, and overlapping spot rectangles, naming the
offending entity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from avpsim.world.geometry import OrientedRect, Pose2, rects_intersect


class MapError(ValueError):
    """Map document violates the schema or an invariant."""


@dataclass(frozen=True)
class SpotRegion:
    id: int
    rect: OrientedRect


@dataclass(frozen=True)
class SpotApproach:
    node: int
    final: Pose2


@dataclass
class LotMap:
    spots: list[SpotRegion]
    dropoff_bay: OrientedRect
    pickup_bay: OrientedRect
    spawn_points: list[Pose2]
    nodes: dict[int, tuple[float, float]]
    edges: list[tuple[int, int, float]]
    spot_approach: dict[int, SpotApproach]
    adjacency: dict[int, list[tuple[int, float]]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        adj: dict[int, list[tuple[int, float]]] = {n: [] for n in self.nodes}
        for a, b, w in self.edges:
            adj[a].append((b, w))
            adj[b].append((a, w))
        for n in adj:
            adj[n].sort()
        self.adjacency = adj

    @property
    def spot_ids(self) -> set[int]:
        return {s.id for s in self.spots}

    def spot(self, spot_id: int) -> SpotRegion:
        for s in self.spots:
            if s.id == spot_id:
                return s
        raise MapError(f"unknown spot id {spot_id}")

    def nearest_node(self, x: float, y: float) -> tuple[int, float]:
        """(node_id, distance); ties broken by smaller node id."""
        best: tuple[float, int] | None = None
        for nid in sorted(self.nodes):
            nx, ny = self.nodes[nid]
            d = math.hypot(nx - x, ny - y)
            if best is None or d < best[0] - 1e-12:
                best = (d, nid)
        assert best is not None
        return best[1], best[0]

    def bay_approach(self, bay: str) -> SpotApproach:
        """Approach for a bay: nearest waypoint plus the bay-center pose."""
        rect = self.dropoff_bay if bay == "dropoff" else self.pickup_bay
        node, _ = self.nearest_node(rect.cx, rect.cy)
        return SpotApproach(node, Pose2(rect.cx, rect.cy, rect.yaw))


def _rect(obj: dict, what: str) -> OrientedRect:
    try:
        return OrientedRect.from_payload(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise MapError(f"bad rectangle for {what}: {exc}") from exc


def load_map(doc: dict[str, Any]) -> LotMap:
    """Build and validate a LotMap from its JSON document form."""
    try:
        spots = [SpotRegion(int(s["id"]), _rect(s, f"spot {s.get('id')}")) for s in doc["spots"]]
        dropoff = _rect(doc["dropoff_bay"], "dropoff_bay")
        pickup = _rect(doc["pickup_bay"], "pickup_bay")
        spawns = [Pose2.from_payload(p) for p in doc["spawn_points"]]
        nodes = {int(n["id"]): (float(n["x"]), float(n["y"])) for n in doc["waypoints"]["nodes"]}
        edges = [
            (int(e["a"]), int(e["b"]), float(e["w"])) for e in doc["waypoints"]["edges"]
        ]
        approaches = {
            int(a["spot"]): SpotApproach(
                int(a["node"]), Pose2(float(a["x"]), float(a["y"]), float(a["yaw"]))
            )
            for a in doc["spot_approach"]
        }
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MapError):
            raise
        raise MapError(f"malformed map document: {exc}") from exc

    seen: set[int] = set()
    for s in spots:
        if s.id in seen:
            raise MapError(f"duplicate spot id {s.id}")
        seen.add(s.id)
    if len(nodes) != len({*nodes}):
        raise MapError("duplicate waypoint node id")
    if not nodes:
        raise MapError("waypoint graph is empty")
    for a, b, w in edges:
        if a not in nodes or b not in nodes:
            raise MapError(f"edge ({a},{b}) references unknown node")
        if w <= 0:
            raise MapError(f"edge ({a},{b}) has nonpositive weight {w}")

    # connectivity (BFS; the test suite re-checks with union-find)
    start = next(iter(nodes))
    seen_nodes = {start}
    frontier = [start]
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for a, b, _ in edges:
        adj[a].append(b)
        adj[b].append(a)
    while frontier:
        cur = frontier.pop()
        for nxt in adj[cur]:
            if nxt not in seen_nodes:
                seen_nodes.add(nxt)
                frontier.append(nxt)
    if seen_nodes != set(nodes):
        missing = sorted(set(nodes) - seen_nodes)
        raise MapError(f"waypoint graph disconnected: nodes {missing} unreachable")

    for ap_spot, ap in approaches.items():
        if ap_spot not in seen:
            raise MapError(f"spot_approach references unknown spot {ap_spot}")
        if ap.node not in nodes:
            raise MapError(f"spot_approach for spot {ap_spot} references unknown node {ap.node}")
    for s in spots:
        if s.id not in approaches:
            raise MapError(f"spot {s.id} has no approach entry")

    for i, a in enumerate(spots):
        for b in spots[i + 1 :]:
            if rects_intersect(a.rect, b.rect):
                raise MapError(f"spot rectangles {a.id} and {b.id} overlap")

    return LotMap(spots, dropoff, pickup, spawns, nodes, edges, approaches)


def load_map_file(path: str | Path) -> LotMap:
    with open(path, "r", encoding="utf-8") as fh:
        return load_map(json.load(fh))


def reference_map_path() -> Path:
    """Path of the shipped 12-spot reference lot."""
    return Path(__file__).resolve().parent.parent / "maps" / "lot12.json"

