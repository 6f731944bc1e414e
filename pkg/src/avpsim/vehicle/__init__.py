"""Per-vehicle lifecycle controller: event-driven state machine plus the
node process that turns grants, goal outcomes, and operator commands into
path goals."""

from avpsim.vehicle.fsm import (
    Action,
    BayGrant,
    Command,
    GoalFailed,
    GoalReached,
    LifecycleState,
    NodeContext,
    NodeEvent,
    ReserveReply,
    Tick,
    transition,
)

__all__ = [
    "Action",
    "BayGrant",
    "Command",
    "GoalFailed",
    "GoalReached",
    "LifecycleState",
    "NodeContext",
    "NodeEvent",
    "ReserveReply",
    "Tick",
    "transition",
]
