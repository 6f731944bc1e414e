"""Run reports: per-vehicle transition log, reservation log, collision count,
RTT stats, assertion results. Serializes losslessly to JSON; canonical forms
drop every timestamp field (keys ending in `_ns`) so determinism can be
asserted byte-for-byte."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from avpsim.coordination.managers import RESERVED_NAMESPACES
from avpsim.harness.checks import CheckResult


def strip_timestamps(obj: Any) -> Any:
    """Recursively drop dict keys ending in '_ns'."""
    if isinstance(obj, dict):
        return {k: strip_timestamps(v) for k, v in obj.items() if not k.endswith("_ns")}
    if isinstance(obj, list):
        return [strip_timestamps(v) for v in obj]
    return obj


@dataclass
class RunReport:
    scenario_name: str
    seed: int
    mode: str
    duration_wall_s: float
    transitions: list[dict] = field(default_factory=list)  # {ns, state, seq, failed, t_ns}
    reservations: list[dict] = field(default_factory=list)  # {event, ns, spot_id, t_ns}
    collisions: int = 0
    final_states: dict[str, str] = field(default_factory=dict)
    rtt: dict[str, dict] = field(default_factory=dict)  # ns -> RttStats payload
    resources: dict[str, dict] = field(default_factory=dict)
    assertion_results: list[dict] = field(default_factory=list)
    aborted: str | None = None  # readiness timeout or component crash

    # -- derived views ---------------------------------------------------------

    def transitions_by_vehicle(self) -> dict[str, list[dict]]:
        out: dict[str, list[dict]] = {}
        for t in self.transitions:
            out.setdefault(t["ns"], []).append(t)
        return {ns: out[ns] for ns in sorted(out)}

    def canonical_transitions(self) -> bytes:
        """Per-vehicle transition sequences, timestamps stripped."""
        canon = strip_timestamps(self.transitions_by_vehicle())
        return json.dumps(canon, sort_keys=True, separators=(",", ":")).encode()

    def canonical_reservations(self) -> bytes:
        canon = strip_timestamps(self.reservations)
        return json.dumps(canon, sort_keys=True, separators=(",", ":")).encode()

    def spots_held_at_end(self) -> dict[str, int]:
        held: dict[str, int] = {}
        for r in self.reservations:
            if r["event"] == "grant":
                held[r["ns"]] = r["spot_id"]
            elif r["event"] in ("release", "evict") and r["ns"] in held:
                if r.get("spot_id") in (None, held[r["ns"]]):
                    del held[r["ns"]]
        return held

    def all_assertions_passed(self) -> bool:
        return all(a["passed"] for a in self.assertion_results)

    # -- serialization ------------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "RunReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def results_to_dicts(results: list[CheckResult]) -> list[dict]:
    return [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]


def extract_transitions(entries: list[dict]) -> list[dict]:
    out = []
    for e in entries:
        parts = e["key"].split("/")
        if (len(parts) == 3 and parts[0] == "avp" and parts[2] == "status"
                and parts[1] not in RESERVED_NAMESPACES):
            p = e.get("payload") or {}
            if isinstance(p.get("state"), str):
                out.append(
                    {
                        "ns": parts[1],
                        "state": p["state"],
                        "seq": p.get("seq"),
                        "failed": bool(p.get("failed")),
                        "t_ns": e.get("recv_ns"),
                    }
                )
    return out


def extract_reservations(entries: list[dict]) -> list[dict]:
    out = []
    for e in entries:
        key = e["key"]
        p = e.get("payload") or {}
        parts = key.split("/")
        if len(parts) == 3 and parts[0] == "avp" and parts[1] not in RESERVED_NAMESPACES:
            ns, topic = parts[1], parts[2]
            if topic == "reserve_reply" and p.get("granted"):
                out.append(
                    {"event": "grant", "ns": ns, "spot_id": int(p["spot_id"]),
                     "t_ns": e.get("recv_ns")}
                )
            elif topic == "release" and p.get("what") == "spot":
                out.append(
                    {"event": "release", "ns": ns, "spot_id": int(p["spot_id"]),
                     "t_ns": e.get("recv_ns")}
                )
        elif key == "avp/coord/evicted":
            for ns in p.get("evicted", ()):
                out.append({"event": "evict", "ns": ns, "spot_id": None,
                            "t_ns": e.get("recv_ns")})
    return out
