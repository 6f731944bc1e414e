"""Offline assertion suite over a recorded tap.

Pure function of the entry list: replaying the same tap yields the same
results. Every check passes vacuously on an empty tap.
"""

from __future__ import annotations

from dataclasses import dataclass

from avpsim.coordination.managers import RESERVED_NAMESPACES


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'}" + (
            f" ({self.detail})" if self.detail else ""
        )


def _vehicle_topic(key: str) -> tuple[str, str] | None:
    parts = key.split("/")
    if len(parts) == 3 and parts[0] == "avp" and parts[1] not in RESERVED_NAMESPACES:
        return parts[1], parts[2]
    return None


def check_bus_fifo(entries: list[dict]) -> CheckResult:
    """Envelope seq strictly increases per (sender_id, key)."""
    last: dict[tuple[str, str], int] = {}
    for i, e in enumerate(entries):
        ident = (e["sender_id"], e["key"])
        seq = e["seq"]
        if ident in last and seq <= last[ident]:
            return CheckResult(
                "bus-fifo", False,
                f"entry {i}: seq {seq} after {last[ident]} for {ident}",
            )
        last[ident] = seq
    return CheckResult("bus-fifo", True)


def check_status_seq(entries: list[dict]) -> CheckResult:
    """Per-vehicle lifecycle status seq strictly increases."""
    last: dict[str, int] = {}
    for i, e in enumerate(entries):
        vt = _vehicle_topic(e["key"])
        if vt is None or vt[1] != "status":
            continue
        ns = vt[0]
        seq = (e.get("payload") or {}).get("seq")
        if not isinstance(seq, int):
            return CheckResult("status-seq", False, f"entry {i}: malformed status from {ns}")
        if ns in last and seq <= last[ns]:
            return CheckResult(
                "status-seq", False, f"entry {i}: {ns} seq {seq} after {last[ns]}"
            )
        last[ns] = seq
    return CheckResult("status-seq", True)


def check_zero_collisions(entries: list[dict]) -> CheckResult:
    n = sum(1 for e in entries if e["key"] == "avp/sim/collision")
    return CheckResult("zero-collisions", n == 0, f"{n} collision events" if n else "")


def check_occupancy_partition(entries: list[dict], spot_ids: set[int] | None) -> CheckResult:
    """occupied and available are disjoint and always cover the same spot set."""
    universe: frozenset[int] | None = frozenset(spot_ids) if spot_ids is not None else None
    for i, e in enumerate(entries):
        if e["key"] != "avp/rsu/occupancy":
            continue
        p = e.get("payload") or {}
        occ = frozenset(p.get("occupied", ()))
        avail = frozenset(p.get("available", ()))
        if occ & avail:
            return CheckResult(
                "occupancy-partition", False, f"entry {i}: sets intersect: {sorted(occ & avail)}"
            )
        union = occ | avail
        if universe is None:
            universe = union
        elif union != universe:
            return CheckResult(
                "occupancy-partition", False,
                f"entry {i}: union {sorted(union)} != expected {sorted(universe)}",
            )
    return CheckResult("occupancy-partition", True)


def check_reservation_mutex(entries: list[dict]) -> CheckResult:
    """At most one holder per spot and one spot per vehicle at every instant.

    Folds the grant stream; holdings end when a reserved-table snapshot no
    longer contains the pair (release or eviction).
    """
    holders: dict[int, str] = {}
    for i, e in enumerate(entries):
        key = e["key"]
        p = e.get("payload") or {}
        vt = _vehicle_topic(key)
        if vt is not None and vt[1] == "reserve_reply" and p.get("granted"):
            ns = vt[0]
            spot = int(p["spot_id"])
            if spot in holders:
                return CheckResult(
                    "reservation-mutex", False,
                    f"entry {i}: spot {spot} granted to {ns} while held by {holders[spot]}",
                )
            if ns in holders.values():
                other = next(s for s, h in holders.items() if h == ns)
                return CheckResult(
                    "reservation-mutex", False,
                    f"entry {i}: {ns} granted spot {spot} while holding {other}",
                )
            holders[spot] = ns
        elif key == "avp/coord/reserved":
            table = {int(s): ns for s, ns in (p.get("holders") or {}).items()}
            seen = list(table.values())
            if len(seen) != len(set(seen)):
                return CheckResult(
                    "reservation-mutex", False, f"entry {i}: table holds a vehicle twice"
                )
            for spot, ns in table.items():
                if holders.get(spot) != ns:
                    return CheckResult(
                        "reservation-mutex", False,
                        f"entry {i}: table pair ({spot}, {ns}) without a live grant",
                    )
            holders = {s: h for s, h in holders.items() if table.get(s) == h}
    return CheckResult("reservation-mutex", True)


def check_queue_fifo(entries: list[dict]) -> CheckResult:
    """Bay service order equals enqueue order, after dropping evicted vehicles."""
    enqueued: list[str] = []
    grants: list[str] = []
    rejected_dup: set[str] = set()
    for e in entries:
        vt = _vehicle_topic(e["key"])
        if vt is None:
            continue
        ns, topic = vt
        p = e.get("payload") or {}
        if topic == "queue_req" and ns not in enqueued:
            enqueued.append(ns)
        elif topic == "bay_grant":
            grants.append(ns)
        elif topic == "reject" and p.get("reason") == "not-registered":
            rejected_dup.add(ns)
    expected = [ns for ns in enqueued if ns in set(grants) and ns not in rejected_dup]
    deduped_grants: list[str] = []
    for g in grants:
        if not deduped_grants or deduped_grants[-1] != g:
            deduped_grants.append(g)
    if deduped_grants != expected:
        return CheckResult(
            "queue-fifo", False, f"grant order {deduped_grants} != enqueue order {expected}"
        )
    return CheckResult("queue-fifo", True)


def check_grant_validity(entries: list[dict]) -> CheckResult:
    """Every grant's spot was available in the occupancy frame it cites."""
    frames: dict[int, frozenset[int]] = {}
    for i, e in enumerate(entries):
        key = e["key"]
        p = e.get("payload") or {}
        if key == "avp/rsu/occupancy":
            frames[int(p["frame_seq"])] = frozenset(p.get("available", ()))
            continue
        vt = _vehicle_topic(key)
        if vt is not None and vt[1] == "reserve_reply" and p.get("granted"):
            frame_seq = p.get("frame_seq")
            spot = int(p["spot_id"])
            if frame_seq is None or int(frame_seq) not in frames:
                return CheckResult(
                    "grant-validity", False, f"entry {i}: grant cites unknown frame {frame_seq}"
                )
            if spot not in frames[int(frame_seq)]:
                return CheckResult(
                    "grant-validity", False,
                    f"entry {i}: spot {spot} not available in frame {frame_seq}",
                )
    return CheckResult("grant-validity", True)


def assert_suite(entries: list[dict], spot_ids: set[int] | None = None) -> list[CheckResult]:
    """All tap-replay checks, in a stable order."""
    return [
        check_reservation_mutex(entries),
        check_queue_fifo(entries),
        check_status_seq(entries),
        check_zero_collisions(entries),
        check_occupancy_partition(entries, spot_ids),
        check_grant_validity(entries),
        check_bus_fifo(entries),
    ]
