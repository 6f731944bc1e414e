"""Vehicle lifecycle state machine.

`transition` is a total pure function: unmatched (state, event) pairs are
no-ops, and the same (context, event, now) always yields the same result.
Dwell timers and the reservation retry backoff live in the context so the
function itself stays stateless.

Machine states and their happy path:

    ARRIVING --DROPOFF--> QUEUED_DROPOFF --grant+drive--> AT_DROPOFF_BAY
      --dwell--> AWAITING_PARK --PARK--> SPOT_REQUESTED --grant+drive-->
      EN_ROUTE_SPOT --> PARKED --RETRIEVE--> RETRIEVAL_REQUESTED -->
      EN_ROUTE_PICKUP --> AT_PICKUP --dwell--> DEPARTED

A failed goal falls back to the last stable state (releasing any held spot)
so the operator can re-command.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from avpsim.world.routing import BayGoal, Goal, SpotGoal

DWELL_S_DEFAULT = 3.0
RETRY_S_DEFAULT = 1.0


class LifecycleState(str, Enum):
    ARRIVING = "ARRIVING"
    QUEUED_DROPOFF = "QUEUED_DROPOFF"
    AT_DROPOFF_BAY = "AT_DROPOFF_BAY"
    AWAITING_PARK = "AWAITING_PARK"
    SPOT_REQUESTED = "SPOT_REQUESTED"
    EN_ROUTE_SPOT = "EN_ROUTE_SPOT"
    PARKED = "PARKED"
    RETRIEVAL_REQUESTED = "RETRIEVAL_REQUESTED"
    EN_ROUTE_PICKUP = "EN_ROUTE_PICKUP"
    AT_PICKUP = "AT_PICKUP"
    DEPARTED = "DEPARTED"


# states a failed goal can fall back to
STABLE_STATES = frozenset(
    {
        LifecycleState.ARRIVING,
        LifecycleState.QUEUED_DROPOFF,
        LifecycleState.AT_DROPOFF_BAY,
        LifecycleState.AWAITING_PARK,
        LifecycleState.PARKED,
        LifecycleState.AT_PICKUP,
        LifecycleState.DEPARTED,
    }
)

COMMAND_KINDS = ("DROPOFF", "PARK", "RETRIEVE")


# -- events ---------------------------------------------------------------


@dataclass(frozen=True)
class Command:
    kind: str
    def __post_init__(self) -> None:
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {self.kind!r}")


@dataclass(frozen=True)
class BayGrant:
    pass


@dataclass(frozen=True)
class ReserveReply:
    granted: bool
    spot_id: int | None = None
    reason: str | None = None


@dataclass(frozen=True)
class GoalReached:
    pass


@dataclass(frozen=True)
class GoalFailed:
    pass


@dataclass(frozen=True)
class Tick:
    pass


NodeEvent = Command | BayGrant | ReserveReply | GoalReached | GoalFailed | Tick


# -- actions ----------------------------------------------------------------


@dataclass(frozen=True)
class SendStatus:
    pass


@dataclass(frozen=True)
class Enqueue:
    pass


@dataclass(frozen=True)
class SendPath:
    goal: Goal


@dataclass(frozen=True)
class ReleaseBay:
    pass


@dataclass(frozen=True)
class RequestReservation:
    pass


@dataclass(frozen=True)
class ReleaseReservation:
    spot_id: int


@dataclass(frozen=True)
class Despawn:
    pass


Action = (
    SendStatus | Enqueue | SendPath | ReleaseBay | RequestReservation
    | ReleaseReservation | Despawn
)


@dataclass(frozen=True)
class NodeContext:
    """Machine state plus the timers that drive dwell and retry."""

    state: LifecycleState = LifecycleState.ARRIVING
    en_route_bay: bool = False
    held_spot: int | None = None
    dwell_since_s: float | None = None
    retry_at_s: float | None = None
    last_stable: LifecycleState = LifecycleState.ARRIVING
    failed: bool = False


def _enter(ctx: NodeContext, state: LifecycleState, **changes) -> NodeContext:
    if state in STABLE_STATES:
        changes.setdefault("last_stable", state)
    changes.setdefault("failed", False)
    return replace(ctx, state=state, **changes)


def transition(
    ctx: NodeContext,
    event: NodeEvent,
    now_s: float,
    dwell_s: float = DWELL_S_DEFAULT,
    retry_s: float = RETRY_S_DEFAULT,
) -> tuple[NodeContext, list[Action]]:
    """Apply one event; unmatched pairs return (ctx, [])."""
    s = ctx.state

    if isinstance(event, GoalFailed):
        if s == LifecycleState.DEPARTED:
            return ctx, []
        actions: list[Action] = []
        changes: dict = {"en_route_bay": False, "dwell_since_s": None, "retry_at_s": None}
        if ctx.held_spot is not None and s == LifecycleState.EN_ROUTE_SPOT:
            actions.append(ReleaseReservation(ctx.held_spot))
            changes["held_spot"] = None
        actions.append(SendStatus())
        nxt = replace(ctx, state=ctx.last_stable, failed=True, **changes)
        return nxt, actions

    if s == LifecycleState.ARRIVING:
        if isinstance(event, Command) and event.kind == "DROPOFF":
            return _enter(ctx, LifecycleState.QUEUED_DROPOFF), [Enqueue(), SendStatus()]

    elif s == LifecycleState.QUEUED_DROPOFF:
        if isinstance(event, BayGrant) and not ctx.en_route_bay:
            nxt = replace(ctx, en_route_bay=True)
            return nxt, [SendPath(BayGoal("dropoff")), SendStatus()]
        if isinstance(event, GoalReached) and ctx.en_route_bay:
            nxt = _enter(
                ctx, LifecycleState.AT_DROPOFF_BAY, en_route_bay=False, dwell_since_s=now_s
            )
            return nxt, [SendStatus()]

    elif s == LifecycleState.AT_DROPOFF_BAY:
        if isinstance(event, Tick) and ctx.dwell_since_s is not None:
            if now_s - ctx.dwell_since_s >= dwell_s:
                nxt = _enter(ctx, LifecycleState.AWAITING_PARK, dwell_since_s=None)
                return nxt, [ReleaseBay(), SendStatus()]

    elif s == LifecycleState.AWAITING_PARK:
        if isinstance(event, Command) and event.kind == "PARK":
            return _enter(ctx, LifecycleState.SPOT_REQUESTED), [
                RequestReservation(),
                SendStatus(),
            ]

    elif s == LifecycleState.SPOT_REQUESTED:
        if isinstance(event, ReserveReply):
            if event.granted and event.spot_id is not None:
                nxt = _enter(
                    ctx, LifecycleState.EN_ROUTE_SPOT, held_spot=event.spot_id, retry_at_s=None
                )
                return nxt, [SendPath(SpotGoal(event.spot_id)), SendStatus()]
            return replace(ctx, retry_at_s=now_s + retry_s), []
        if isinstance(event, Tick) and ctx.retry_at_s is not None and now_s >= ctx.retry_at_s:
            # rearm so a lost reply cannot wedge the vehicle
            return replace(ctx, retry_at_s=now_s + retry_s), [RequestReservation()]

    elif s == LifecycleState.EN_ROUTE_SPOT:
        if isinstance(event, GoalReached):
            return _enter(ctx, LifecycleState.PARKED), [SendStatus()]

    elif s == LifecycleState.PARKED:
        if isinstance(event, Command) and event.kind == "RETRIEVE":
            return _enter(ctx, LifecycleState.RETRIEVAL_REQUESTED), [SendStatus()]

    elif s == LifecycleState.RETRIEVAL_REQUESTED:
        if isinstance(event, Tick):
            actions = [SendPath(BayGoal("pickup"))]
            changes: dict = {}
            if ctx.held_spot is not None:
                actions.append(ReleaseReservation(ctx.held_spot))
                changes["held_spot"] = None
            actions.append(SendStatus())
            return _enter(ctx, LifecycleState.EN_ROUTE_PICKUP, **changes), actions

    elif s == LifecycleState.EN_ROUTE_PICKUP:
        if isinstance(event, GoalReached):
            nxt = _enter(ctx, LifecycleState.AT_PICKUP, dwell_since_s=now_s)
            return nxt, [SendStatus()]

    elif s == LifecycleState.AT_PICKUP:
        if isinstance(event, Tick) and ctx.dwell_since_s is not None:
            if now_s - ctx.dwell_since_s >= dwell_s:
                nxt = _enter(ctx, LifecycleState.DEPARTED, dwell_since_s=None)
                return nxt, [Despawn(), SendStatus()]

    return ctx, []
