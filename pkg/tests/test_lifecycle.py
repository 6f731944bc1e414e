"""Lifecycle machine: table edges, totality over the full product, purity."""

import itertools

import pytest

from avpsim.vehicle.fsm import (
    BayGrant,
    Command,
    Despawn,
    Enqueue,
    GoalFailed,
    GoalReached,
    LifecycleState as S,
    NodeContext,
    ReleaseBay,
    ReleaseReservation,
    RequestReservation,
    ReserveReply,
    SendPath,
    SendStatus,
    Tick,
    transition,
)
from avpsim.world.routing import BayGoal, SpotGoal

NOW = 100.0


def ctx_for(state: S) -> NodeContext:
    """A representative context for each state (timers armed where relevant)."""
    base = NodeContext(state=state)
    if state == S.QUEUED_DROPOFF:
        return base
    if state in (S.AT_DROPOFF_BAY, S.AT_PICKUP):
        return NodeContext(state=state, dwell_since_s=NOW - 10.0, last_stable=state)
    if state == S.SPOT_REQUESTED:
        return NodeContext(state=state, retry_at_s=NOW - 1.0, last_stable=S.AWAITING_PARK)
    if state == S.EN_ROUTE_SPOT:
        return NodeContext(state=state, held_spot=4, last_stable=S.AWAITING_PARK)
    if state in (S.RETRIEVAL_REQUESTED, S.EN_ROUTE_PICKUP):
        return NodeContext(state=state, held_spot=4 if state == S.RETRIEVAL_REQUESTED else None,
                           last_stable=S.PARKED)
    return base


EVENT_PROTOTYPES = [
    Command("DROPOFF"),
    Command("PARK"),
    Command("RETRIEVE"),
    BayGrant(),
    ReserveReply(True, spot_id=4),
    ReserveReply(False, reason="no-spot"),
    GoalReached(),
    GoalFailed(),
    Tick(),
]


class TestHappyPath:
    def test_full_lifecycle(self):
        ctx = NodeContext()
        ctx, acts = transition(ctx, Command("DROPOFF"), 0.0)
        assert ctx.state == S.QUEUED_DROPOFF and acts == [Enqueue(), SendStatus()]
        ctx, acts = transition(ctx, BayGrant(), 1.0)
        assert ctx.state == S.QUEUED_DROPOFF and acts[0] == SendPath(BayGoal("dropoff"))
        ctx, acts = transition(ctx, GoalReached(), 5.0)
        assert ctx.state == S.AT_DROPOFF_BAY
        ctx, acts = transition(ctx, Tick(), 7.0)
        assert ctx.state == S.AT_DROPOFF_BAY and acts == []  # dwell not elapsed
        ctx, acts = transition(ctx, Tick(), 8.1)
        assert ctx.state == S.AWAITING_PARK and acts == [ReleaseBay(), SendStatus()]
        ctx, acts = transition(ctx, Command("PARK"), 9.0)
        assert ctx.state == S.SPOT_REQUESTED and acts == [RequestReservation(), SendStatus()]
        ctx, acts = transition(ctx, ReserveReply(True, spot_id=6), 9.5)
        assert ctx.state == S.EN_ROUTE_SPOT and acts[0] == SendPath(SpotGoal(6))
        assert ctx.held_spot == 6
        ctx, acts = transition(ctx, GoalReached(), 20.0)
        assert ctx.state == S.PARKED and ctx.held_spot == 6
        ctx, acts = transition(ctx, Command("RETRIEVE"), 30.0)
        assert ctx.state == S.RETRIEVAL_REQUESTED
        ctx, acts = transition(ctx, Tick(), 30.1)
        assert ctx.state == S.EN_ROUTE_PICKUP
        assert acts == [SendPath(BayGoal("pickup")), ReleaseReservation(6), SendStatus()]
        assert ctx.held_spot is None
        ctx, acts = transition(ctx, GoalReached(), 40.0)
        assert ctx.state == S.AT_PICKUP
        ctx, acts = transition(ctx, Tick(), 43.1)
        assert ctx.state == S.DEPARTED and acts == [Despawn(), SendStatus()]

    def test_park_command_forced_by_table(self):
        ctx = NodeContext(state=S.AWAITING_PARK)
        nxt, acts = transition(ctx, Command("PARK"), NOW)
        assert nxt.state == S.SPOT_REQUESTED
        assert acts == [RequestReservation(), SendStatus()]

    def test_parked_park_is_noop(self):
        ctx = NodeContext(state=S.PARKED)
        assert transition(ctx, Command("PARK"), NOW) == (ctx, [])


class TestDenyRetry:
    def test_deny_arms_backoff_without_status(self):
        ctx = NodeContext(state=S.SPOT_REQUESTED)
        nxt, acts = transition(ctx, ReserveReply(False, reason="no-spot"), NOW, retry_s=1.0)
        assert nxt.state == S.SPOT_REQUESTED
        assert nxt.retry_at_s == NOW + 1.0
        assert acts == []

    def test_retry_fires_after_backoff(self):
        ctx = NodeContext(state=S.SPOT_REQUESTED, retry_at_s=NOW)
        nxt, acts = transition(ctx, Tick(), NOW + 0.1)
        assert acts == [RequestReservation()]
        assert nxt.retry_at_s == pytest.approx(NOW + 1.1)

    def test_no_retry_before_backoff(self):
        ctx = NodeContext(state=S.SPOT_REQUESTED, retry_at_s=NOW + 1.0)
        assert transition(ctx, Tick(), NOW) == (ctx, [])


class TestGoalFailed:
    def test_en_route_spot_failure_releases_and_falls_back(self):
        ctx = ctx_for(S.EN_ROUTE_SPOT)
        nxt, acts = transition(ctx, GoalFailed(), NOW)
        assert nxt.state == S.AWAITING_PARK
        assert nxt.failed is True
        assert nxt.held_spot is None
        assert acts == [ReleaseReservation(4), SendStatus()]

    def test_en_route_pickup_failure_returns_to_parked(self):
        ctx = ctx_for(S.EN_ROUTE_PICKUP)
        nxt, acts = transition(ctx, GoalFailed(), NOW)
        assert nxt.state == S.PARKED
        assert acts == [SendStatus()]

    def test_failed_flag_clears_on_next_transition(self):
        ctx = NodeContext(state=S.AWAITING_PARK, failed=True, last_stable=S.AWAITING_PARK)
        nxt, _ = transition(ctx, Command("PARK"), NOW)
        assert nxt.failed is False

    def test_departed_ignores_failure(self):
        ctx = NodeContext(state=S.DEPARTED, last_stable=S.DEPARTED)
        assert transition(ctx, GoalFailed(), NOW) == (ctx, [])


VALID_EDGES = {
    (S.ARRIVING, "Command:DROPOFF"): S.QUEUED_DROPOFF,
    (S.QUEUED_DROPOFF, "BayGrant"): S.QUEUED_DROPOFF,
    (S.QUEUED_DROPOFF, "GoalReached"): S.AT_DROPOFF_BAY,
    (S.AT_DROPOFF_BAY, "Tick"): S.AWAITING_PARK,
    (S.AWAITING_PARK, "Command:PARK"): S.SPOT_REQUESTED,
    (S.SPOT_REQUESTED, "ReserveReply:grant"): S.EN_ROUTE_SPOT,
    (S.SPOT_REQUESTED, "ReserveReply:deny"): S.SPOT_REQUESTED,
    (S.SPOT_REQUESTED, "Tick"): S.SPOT_REQUESTED,
    (S.EN_ROUTE_SPOT, "GoalReached"): S.PARKED,
    (S.PARKED, "Command:RETRIEVE"): S.RETRIEVAL_REQUESTED,
    (S.RETRIEVAL_REQUESTED, "Tick"): S.EN_ROUTE_PICKUP,
    (S.EN_ROUTE_PICKUP, "GoalReached"): S.AT_PICKUP,
    (S.AT_PICKUP, "Tick"): S.DEPARTED,
}


def event_label(event) -> str:
    if isinstance(event, Command):
        return f"Command:{event.kind}"
    if isinstance(event, ReserveReply):
        return "ReserveReply:grant" if event.granted else "ReserveReply:deny"
    return type(event).__name__


class TestTotalityAndPurity:
    @pytest.mark.parametrize(
        "state,event",
        list(itertools.product(list(S), EVENT_PROTOTYPES)),
        ids=lambda v: getattr(v, "value", None) or event_label(v),
    )
    def test_every_pair_is_edge_or_noop(self, state, event):
        ctx = ctx_for(state)
        # en-route-to-bay variant of QUEUED_DROPOFF is exercised separately below
        nxt, actions = transition(ctx, event, NOW)
        label = event_label(event)
        if isinstance(event, GoalFailed) and state != S.DEPARTED:
            assert nxt.state == ctx.last_stable
        elif (state, label) in VALID_EDGES:
            expected = VALID_EDGES[(state, label)]
            if state == S.QUEUED_DROPOFF and label == "GoalReached":
                expected = S.QUEUED_DROPOFF  # grant not yet received: no-op
            assert nxt.state == expected
        else:
            assert (nxt, actions) == (ctx, [])

    @pytest.mark.parametrize(
        "state,event",
        list(itertools.product(list(S), EVENT_PROTOTYPES)),
        ids=lambda v: getattr(v, "value", None) or event_label(v),
    )
    def test_purity_repeat_call_equality(self, state, event):
        ctx = ctx_for(state)
        assert transition(ctx, event, NOW) == transition(ctx, event, NOW)

    def test_en_route_bay_variant_reaches_bay(self):
        ctx = NodeContext(state=S.QUEUED_DROPOFF, en_route_bay=True)
        nxt, _ = transition(ctx, GoalReached(), NOW)
        assert nxt.state == S.AT_DROPOFF_BAY

    def test_state_only_changes_along_edges_random_walk(self):
        import random

        rng = random.Random(21)
        ctx = NodeContext()
        now = 0.0
        for _ in range(5000):
            now += rng.uniform(0.01, 2.0)
            event = rng.choice(EVENT_PROTOTYPES)
            nxt, _ = transition(ctx, event, now)
            if nxt.state != ctx.state:
                label = event_label(event)
                if label == "GoalFailed":
                    assert nxt.state == ctx.last_stable
                else:
                    key = (ctx.state, label)
                    assert key in VALID_EDGES
                    assert nxt.state == VALID_EDGES[key]
            ctx = nxt

    def test_goal_legality_path_only_with_grant(self):
        # SendPath(spot) appears only on the grant edge carrying that spot
        ctx = NodeContext(state=S.SPOT_REQUESTED)
        nxt, acts = transition(ctx, ReserveReply(True, spot_id=9), NOW)
        sends = [a for a in acts if isinstance(a, SendPath)]
        assert sends == [SendPath(SpotGoal(9))]
        assert nxt.held_spot == 9
