"""The four coordination managers behind one deterministic core.

`ManagerCore.handle` folds one inbound message into state and returns the
messages to publish; all state is a pure function of the message sequence
(plus explicit `expire_stale` calls), which is what makes offline replay
against the recorded tap possible.

Vehicle count lives in the roster; status rows apply last-writer-wins by
per-vehicle sequence; the drop-off queue grants the bay to its head only;
the reservation table holds at most one spot per vehicle and one vehicle
per spot.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

log = logging.getLogger(__name__)

VEHICLES_KEY = "avp/coord/vehicles"
STATUS_KEY = "avp/coord/status"
QUEUE_KEY = "avp/coord/queue"
RESERVED_KEY = "avp/coord/reserved"
EVICTED_KEY = "avp/coord/evicted"

# namespaces that can never be vehicles
RESERVED_NAMESPACES = {"coord", "rsu", "sim", "probe", "_ready"}

Outbound = list[tuple[str, Any]]


@dataclass
class RosterEntry:
    joined_at_ns: int
    last_heartbeat_ns: int


@dataclass
class StatusRow:
    state: str
    seq: int
    updated_at_ns: int

    def to_payload(self) -> dict:
        return {"state": self.state, "seq": self.seq, "updated_at_ns": self.updated_at_ns}


class ManagerCore:
    """State and decision logic for all four managers."""

    def __init__(self, policy: str = "lowest-id", heartbeat_timeout_ns: int = 5_000_000_000):
        if policy not in ("lowest-id", "nearest"):
            raise ValueError(f"unknown reservation policy {policy!r}")
        self.policy = policy
        self.heartbeat_timeout_ns = heartbeat_timeout_ns
        self.roster: dict[str, RosterEntry] = {}
        self.status: dict[str, StatusRow] = {}
        self.queue: list[str] = []
        self.granted_head: str | None = None
        self.holders: dict[int, str] = {}
        self.latest_available: set[int] | None = None
        self.latest_frame_seq: int | None = None
        self.poses: dict[str, tuple[float, float]] = {}
        self.spot_centers: dict[int, tuple[float, float]] = {}

    # -- message entry point ---------------------------------------------------

    def handle(self, key: str, payload: Any, now_ns: int) -> Outbound:
        segments = key.split("/")
        if key == "avp/rsu/occupancy":
            return self._on_occupancy(payload)
        if key == "avp/sim/poses":
            return self._on_poses(payload)
        if len(segments) != 3 or segments[0] != "avp":
            return []
        ns, op = segments[1], segments[2]
        if ns in RESERVED_NAMESPACES:
            return []
        payload = payload if isinstance(payload, dict) else {}
        if op == "register":
            return self._register(ns, now_ns)
        if op == "heartbeat":
            return self._heartbeat(ns, now_ns)
        if op == "status":
            return self._update_status(ns, payload, now_ns)
        if op == "queue_req":
            return self._enqueue_dropoff(ns)
        if op == "reserve_request":
            return self._request_reservation(ns)
        if op == "release":
            if payload.get("what") == "bay":
                return self._release_dropoff(ns)
            if payload.get("what") == "spot":
                return self._release_reservation(ns, payload.get("spot_id"))
            return [self._reject(ns, "release", "unknown-release-kind")]
        return []

    # -- vehicle count manager ---------------------------------------------------

    def _register(self, ns: str, now_ns: int) -> Outbound:
        if ns in self.roster:
            return [self._reject(ns, "register", "duplicate-namespace")]
        self.roster[ns] = RosterEntry(now_ns, now_ns)
        return [
            (f"avp/{ns}/register_reply", {"active_count": len(self.roster)}),
            self._vehicles_msg(),
        ]

    def _heartbeat(self, ns: str, now_ns: int) -> Outbound:
        entry = self.roster.get(ns)
        if entry is not None:
            entry.last_heartbeat_ns = now_ns
        return []

    # -- status manager ---------------------------------------------------------

    def _update_status(self, ns: str, payload: dict, now_ns: int) -> Outbound:
        if ns not in self.roster:
            log.warning("status from unregistered %s ignored", ns)
            return []
        try:
            state = str(payload["state"])
            seq = int(payload["seq"])
        except (KeyError, TypeError, ValueError):
            log.warning("malformed status from %s ignored", ns)
            return []
        row = self.status.get(ns)
        if row is not None and seq <= row.seq:
            return []
        self.status[ns] = StatusRow(state, seq, now_ns)
        return [self._status_msg()]

    # -- queue manager ------------------------------------------------------------

    def _enqueue_dropoff(self, ns: str) -> Outbound:
        if ns not in self.roster:
            return [self._reject(ns, "queue_req", "not-registered")]
        if ns in self.queue:
            return [self._reject(ns, "queue_req", "duplicate-enqueue")]
        self.queue.append(ns)
        out: Outbound = [
            (f"avp/{ns}/queue_reply", {"position": len(self.queue)}),
            self._queue_msg(),
        ]
        out.extend(self._grant_bay_if_new_head())
        return out

    def _release_dropoff(self, ns: str) -> Outbound:
        if not self.queue or self.queue[0] != ns:
            return [self._reject(ns, "release", "not-head")]
        self.queue.pop(0)
        if self.granted_head == ns:
            self.granted_head = None
        out: Outbound = [self._queue_msg()]
        out.extend(self._grant_bay_if_new_head())
        return out

    def _grant_bay_if_new_head(self) -> Outbound:
        if self.queue and self.granted_head != self.queue[0]:
            self.granted_head = self.queue[0]
            return [(f"avp/{self.granted_head}/bay_grant", {})]
        return []

    # -- reservation manager ---------------------------------------------------------

    def _request_reservation(self, ns: str) -> Outbound:
        def deny(reason: str) -> Outbound:
            return [(f"avp/{ns}/reserve_reply", {"granted": False, "reason": reason})]

        if ns not in self.roster:
            return deny("not-registered")
        if ns in self.holders.values():
            return deny("already-holds")
        if self.latest_available is None:
            return deny("no-occupancy")
        candidates = self.latest_available - set(self.holders)
        if not candidates:
            return deny("no-spot")
        spot = self._pick_spot(ns, candidates)
        self.holders[spot] = ns
        return [
            (
                f"avp/{ns}/reserve_reply",
                {"granted": True, "spot_id": spot, "frame_seq": self.latest_frame_seq},
            ),
            self._reserved_msg(),
        ]

    def _pick_spot(self, ns: str, candidates: set[int]) -> int:
        if self.policy == "nearest":
            pose = self.poses.get(ns)
            if pose is not None and self.spot_centers:
                def dist(spot: int) -> tuple[float, int]:
                    cx, cy = self.spot_centers.get(spot, (math.inf, math.inf))
                    return (math.hypot(cx - pose[0], cy - pose[1]), spot)

                return min(candidates, key=dist)
        return min(candidates)

    def _release_reservation(self, ns: str, spot_id: Any) -> Outbound:
        try:
            spot = int(spot_id)
        except (TypeError, ValueError):
            return [self._reject(ns, "release", "bad-spot-id")]
        if self.holders.get(spot) != ns:
            return [self._reject(ns, "release", "not-holder")]
        del self.holders[spot]
        return [self._reserved_msg()]

    # -- perception inputs ---------------------------------------------------------

    def _on_occupancy(self, payload: Any) -> Outbound:
        if not isinstance(payload, dict):
            return []
        try:
            self.latest_available = {int(i) for i in payload["available"]}
            self.latest_frame_seq = int(payload["frame_seq"])
        except (KeyError, TypeError, ValueError):
            log.warning("malformed occupancy frame ignored")
        return []

    def _on_poses(self, payload: Any) -> Outbound:
        if isinstance(payload, list):
            for entry in payload:
                try:
                    self.poses[entry["ns"]] = (float(entry["x"]), float(entry["y"]))
                except (KeyError, TypeError, ValueError):
                    continue
        return []

    # -- fault handling ---------------------------------------------------------------

    def expire_stale(self, now_ns: int) -> Outbound:
        """Evict vehicles whose heartbeat aged out; free their queue slot and
        reservation."""
        stale = [
            ns
            for ns, entry in self.roster.items()
            if now_ns - entry.last_heartbeat_ns > self.heartbeat_timeout_ns
        ]
        if not stale:
            return []
        queue_changed = False
        holders_changed = False
        for ns in stale:
            del self.roster[ns]
            self.status.pop(ns, None)
            if ns in self.queue:
                self.queue.remove(ns)
                queue_changed = True
            if self.granted_head == ns:
                self.granted_head = None
                queue_changed = True
            for spot, holder in list(self.holders.items()):
                if holder == ns:
                    del self.holders[spot]
                    holders_changed = True
            log.warning("evicted %s (heartbeat timeout)", ns)
        out: Outbound = [(EVICTED_KEY, {"evicted": sorted(stale)})]
        out.append(self._vehicles_msg())
        out.append(self._status_msg())
        if queue_changed:
            out.append(self._queue_msg())
            out.extend(self._grant_bay_if_new_head())
        if holders_changed:
            out.append(self._reserved_msg())
        return out

    # -- table republication -------------------------------------------------------------

    def snapshot(self) -> Outbound:
        """Full-state republish for late joiners."""
        return [
            self._vehicles_msg(),
            self._status_msg(),
            self._queue_msg(),
            self._reserved_msg(),
        ]

    def _vehicles_msg(self) -> tuple[str, Any]:
        return (VEHICLES_KEY, {"count": len(self.roster), "roster": sorted(self.roster)})

    def _status_msg(self) -> tuple[str, Any]:
        rows = {ns: row.to_payload() for ns, row in sorted(self.status.items())}
        return (STATUS_KEY, {"rows": rows})

    def _queue_msg(self) -> tuple[str, Any]:
        return (QUEUE_KEY, {"order": list(self.queue)})

    def _reserved_msg(self) -> tuple[str, Any]:
        return (RESERVED_KEY, {"holders": {str(s): ns for s, ns in sorted(self.holders.items())}})

    def _reject(self, ns: str, op: str, reason: str) -> tuple[str, Any]:
        return (f"avp/{ns}/reject", {"op": op, "reason": reason})
