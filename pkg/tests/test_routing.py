"""Route planning: Dijkstra optimality vs brute force and networkx."""

import math
import random

import networkx as nx
import pytest

from avpsim.world.geometry import Pose2
from avpsim.world.lotmap import LotMap, OrientedRect, SpotApproach, SpotRegion
from avpsim.world.routing import BayGoal, RoutingError, SpotGoal, dijkstra, plan_route


def graph_lot(nodes, edges, approach_node):
    """LotMap wrapper around a bare graph; one spot whose approach is `approach_node`."""
    nx_, ny_ = nodes[approach_node]
    return LotMap(
        spots=[SpotRegion(1, OrientedRect(nx_, ny_ + 500, 2.0, 1.0, 0.0))],
        dropoff_bay=OrientedRect(0, 400, 2, 1, 0),
        pickup_bay=OrientedRect(10, 400, 2, 1, 0),
        spawn_points=[Pose2(0, 0, 0)],
        nodes=nodes,
        edges=edges,
        spot_approach={1: SpotApproach(approach_node, Pose2(nx_, ny_, 0.0))},
    )


def brute_force_cost(nodes, edges, src, dst):
    """Cheapest simple path by exhaustive enumeration."""
    adj = {n: [] for n in nodes}
    for a, b, w in edges:
        adj[a].append((b, w))
        adj[b].append((a, w))
    best = math.inf

    def walk(cur, cost, seen):
        nonlocal best
        if cost >= best:
            return
        if cur == dst:
            best = cost
            return
        for nxt, w in adj[cur]:
            if nxt not in seen:
                walk(nxt, cost + w, seen | {nxt})

    walk(src, 0.0, {src})
    return best


def random_connected_graph(rng, n):
    nodes = {i: (rng.uniform(-50, 50), rng.uniform(-50, 50)) for i in range(1, n + 1)}
    edges = []
    ids = list(nodes)
    rng.shuffle(ids)
    for i in range(1, len(ids)):  # random spanning tree keeps it connected
        a, b = ids[rng.randrange(i)], ids[i]
        edges.append((a, b, rng.uniform(0.5, 10.0)))
    extra = rng.randrange(0, n)
    for _ in range(extra):
        a, b = rng.sample(ids, 2)
        if not any((a, b) == (x, y) or (b, a) == (x, y) for x, y, _ in edges):
            edges.append((a, b, rng.uniform(0.5, 10.0)))
    return nodes, edges


class TestDijkstra:
    def test_line_graph_cost(self):
        nodes = {1: (0.0, 0.0), 2: (1.0, 0.0), 3: (2.0, 0.0)}
        edges = [(1, 2, 1.0), (2, 3, 1.0)]
        lot = graph_lot(nodes, edges, 3)
        path, cost = dijkstra(lot, 1, 3)
        assert path == [1, 2, 3]
        assert cost == pytest.approx(2.0)

    def test_matches_brute_force_on_small_graphs(self):
        rng = random.Random(42)
        for _ in range(40):
            n = rng.randrange(3, 11)
            nodes, edges = random_connected_graph(rng, n)
            lot = graph_lot(nodes, edges, n)
            src, dst = rng.sample(list(nodes), 2)
            _, cost = dijkstra(lot, src, dst)
            assert cost == pytest.approx(brute_force_cost(nodes, edges, src, dst))

    def test_matches_networkx_on_30_node_graphs(self):
        rng = random.Random(7)
        for _ in range(25):
            nodes, edges = random_connected_graph(rng, 30)
            lot = graph_lot(nodes, edges, 30)
            g = nx.Graph()
            for a, b, w in edges:
                if g.has_edge(a, b):
                    g[a][b]["weight"] = min(g[a][b]["weight"], w)
                else:
                    g.add_edge(a, b, weight=w)
            src, dst = rng.sample(list(nodes), 2)
            _, cost = dijkstra(lot, src, dst)
            assert cost == pytest.approx(nx.shortest_path_length(g, src, dst, weight="weight"))

    def test_tie_break_prefers_smaller_node_id(self):
        # two equal-cost routes 1->2->4 and 1->3->4; expansion order must pick via 2
        nodes = {1: (0.0, 0.0), 2: (1.0, 1.0), 3: (1.0, -1.0), 4: (2.0, 0.0)}
        edges = [(1, 2, 1.0), (1, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0)]
        lot = graph_lot(nodes, edges, 4)
        path, _ = dijkstra(lot, 1, 4)
        assert path == [1, 2, 4]


class TestPlanRoute:
    def test_start_at_approach_node_gives_final_pose_only(self):
        nodes = {1: (0.0, 0.0), 2: (5.0, 0.0)}
        edges = [(1, 2, 5.0)]
        lot = graph_lot(nodes, edges, 2)
        path = plan_route(lot, Pose2(5.0, 0.0, 0.0), SpotGoal(1))
        assert len(path) == 1
        assert (path[0].x, path[0].y) == (5.0, 0.0)

    def test_line_graph_route_via_middle(self):
        nodes = {1: (0.0, 0.0), 2: (1.0, 0.0), 3: (2.0, 0.0)}
        edges = [(1, 2, 1.0), (2, 3, 1.0)]
        lot = graph_lot(nodes, edges, 3)
        path = plan_route(lot, Pose2(0.0, 0.0, 0.0), SpotGoal(1))
        assert [(p.x, p.y) for p in path] == [(1.0, 0.0), (2.0, 0.0), (2.0, 0.0)]

    def test_snap_distance_enforced(self):
        nodes = {1: (0.0, 0.0), 2: (5.0, 0.0)}
        edges = [(1, 2, 5.0)]
        lot = graph_lot(nodes, edges, 2)
        with pytest.raises(RoutingError, match="snapping"):
            plan_route(lot, Pose2(0.0, 30.0, 0.0), SpotGoal(1))

    def test_bay_goal_routes_to_bay_pose(self):
        nodes = {1: (0.0, 0.0), 2: (5.0, 0.0)}
        edges = [(1, 2, 5.0)]
        lot = graph_lot(nodes, edges, 2)
        path = plan_route(lot, Pose2(4.0, 1.0, 0.0), BayGoal("dropoff"))
        assert path[-1].x == lot.dropoff_bay.cx
        assert path[-1].y == lot.dropoff_bay.cy

    def test_waypoint_yaws_face_travel_direction(self):
        nodes = {1: (0.0, 0.0), 2: (0.0, 4.0)}
        edges = [(1, 2, 4.0)]
        lot = graph_lot(nodes, edges, 2)
        path = plan_route(lot, Pose2(0.0, -2.0, 0.0), SpotGoal(1))
        assert path[0].yaw == pytest.approx(math.pi / 2)
