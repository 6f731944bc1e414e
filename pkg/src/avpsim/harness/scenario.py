"""Scenario documents: which vehicles exist, the detector model, the command
script, and run pacing. YAML or JSON on disk."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from avpsim.coordination.managers import RESERVED_NAMESPACES
from avpsim.perception.detector import DetectorModel
from avpsim.vehicle.fsm import COMMAND_KINDS, LifecycleState
from avpsim.world.lotmap import reference_map_path
from avpsim.world.sim import DEFAULT_MAX_SPEED_MPS


class ScenarioError(ValueError):
    """Scenario document violates the schema or an invariant."""


@dataclass(frozen=True)
class VehicleSpec:
    ns: str
    spawn_index: int
    class_label: str = "sedan"
    max_speed: float = DEFAULT_MAX_SPEED_MPS


@dataclass(frozen=True)
class ScriptedCommand:
    at_s: float
    kind: str
    target_ns: str
    when_state: str | None = None  # gate: send no earlier than this state


@dataclass
class Scenario:
    name: str
    map_file: Path
    vehicles: list[VehicleSpec]
    detector: DetectorModel
    command_script: list[ScriptedCommand]
    seed: int = 0
    duration_s: float = 60.0
    time_scale: float = 1.0
    mode: str = "subprocess"  # or "thread"
    dwell_s: float = 3.0
    retry_s: float = 1.0
    tick_ms: float = 50.0
    rsu_rate_hz: float = 10.0
    theta: float = 0.05
    probes: bool = True
    reservation_policy: str = "lowest-id"
    heartbeat_timeout_s: float = 5.0
    stop_states: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for v in self.vehicles:
            if v.ns in seen:
                raise ScenarioError(f"duplicate vehicle namespace {v.ns!r}")
            if v.ns in RESERVED_NAMESPACES or "/" in v.ns:
                raise ScenarioError(f"illegal vehicle namespace {v.ns!r}")
            seen.add(v.ns)
        last = -1e18
        for cmd in self.command_script:
            if cmd.at_s < last:
                raise ScenarioError("command_script at_s must be nondecreasing")
            last = cmd.at_s
            if cmd.kind not in COMMAND_KINDS:
                raise ScenarioError(f"unknown command kind {cmd.kind!r}")
            if cmd.target_ns not in seen:
                raise ScenarioError(f"command targets unknown vehicle {cmd.target_ns!r}")
            if cmd.when_state is not None:
                LifecycleState(cmd.when_state)  # raises on bad names
        for ns, state in self.stop_states.items():
            if ns not in seen:
                raise ScenarioError(f"stop_states references unknown vehicle {ns!r}")
            LifecycleState(state)
        if self.mode not in ("subprocess", "thread"):
            raise ScenarioError(f"unknown mode {self.mode!r}")
        if self.time_scale <= 0 or self.duration_s <= 0:
            raise ScenarioError("time_scale and duration_s must be positive")

    def stop_state_for(self, ns: str) -> str:
        return self.stop_states.get(ns, LifecycleState.DEPARTED.value)


def _resolve_map(raw: str, base: Path | None) -> Path:
    p = Path(raw)
    if p.name == "lot12.json" and not p.exists():
        return reference_map_path()
    if not p.is_absolute() and base is not None:
        candidate = base / p
        if candidate.exists():
            return candidate
    return p


def scenario_from_doc(doc: dict, name: str, base: Path | None = None) -> Scenario:
    try:
        vehicles = [
            VehicleSpec(
                ns=str(v["ns"]),
                spawn_index=int(v.get("spawn_index", i)),
                class_label=str(v.get("class_label", "sedan")),
                max_speed=float(v.get("max_speed", DEFAULT_MAX_SPEED_MPS)),
            )
            for i, v in enumerate(doc.get("vehicles", []))
        ]
        det = doc.get("detector", {}) or {}
        detector = DetectorModel(
            p_miss={str(k): float(p) for k, p in (det.get("p_miss") or {}).items()},
            pos_noise_sigma_m=float(det.get("pos_noise_sigma_m", 0.0)),
            seed=int(det.get("seed", doc.get("seed", 0))),
        )
        script = [
            ScriptedCommand(
                at_s=float(c["at_s"]),
                kind=str(c["kind"]),
                target_ns=str(c["target_ns"]),
                when_state=c.get("when_state"),
            )
            for c in doc.get("command_script", []) or []
        ]
        return Scenario(
            name=name,
            map_file=_resolve_map(str(doc.get("map_file", "lot12.json")), base),
            vehicles=vehicles,
            detector=detector,
            command_script=script,
            seed=int(doc.get("seed", 0)),
            duration_s=float(doc.get("duration_s", 60.0)),
            time_scale=float(doc.get("time_scale", 1.0)),
            mode=str(doc.get("mode", "subprocess")),
            dwell_s=float(doc.get("dwell_s", 3.0)),
            retry_s=float(doc.get("retry_s", 1.0)),
            tick_ms=float(doc.get("tick_ms", 50.0)),
            rsu_rate_hz=float(doc.get("rsu_rate_hz", 10.0)),
            theta=float(doc.get("theta", 0.05)),
            probes=bool(doc.get("probes", True)),
            reservation_policy=str(doc.get("reservation_policy", "lowest-id")),
            heartbeat_timeout_s=float(doc.get("heartbeat_timeout_s", 5.0)),
            stop_states={str(k): str(v) for k, v in (doc.get("stop_states") or {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a mapping")
    return scenario_from_doc(doc, name=path.stem, base=path.parent)


def random_scenario(seed: int) -> Scenario:
    """Randomized contention scenario: 3-6 vehicles, random command timings.

    Vehicles stop at PARKED (or DEPARTED for the retrieved subset); commands
    repeat so timing jitter cannot strand a vehicle between states.
    """
    rng = random.Random(seed)
    n = rng.randint(3, 6)
    order = list(range(6))
    rng.shuffle(order)
    vehicles = [VehicleSpec(f"v{i+1}", spawn_index=order[i], max_speed=8.0) for i in range(n)]
    script: list[tuple[float, str, str, str | None]] = []
    retrieved: set[str] = set()
    for v in vehicles:
        script.append((round(rng.uniform(0.2, 3.0), 2), "DROPOFF", v.ns, None))
        park_start = rng.uniform(3.0, 8.0)
        for k in range(10):
            script.append((round(park_start + 1.5 * k, 2), "PARK", v.ns, "AWAITING_PARK"))
        if rng.random() < 0.5:
            retrieved.add(v.ns)
            script.append((round(rng.uniform(12.0, 18.0), 2), "RETRIEVE", v.ns, "PARKED"))
    script.sort(key=lambda c: c[0])
    commands = [ScriptedCommand(t, k, ns, w) for t, k, ns, w in script]
    stop_states = {
        v.ns: ("DEPARTED" if v.ns in retrieved else "PARKED") for v in vehicles
    }
    return Scenario(
        name=f"random-{seed}",
        map_file=reference_map_path(),
        vehicles=vehicles,
        detector=DetectorModel(seed=seed),
        command_script=commands,
        seed=seed,
        duration_s=45.0,
        time_scale=10.0,
        mode="thread",
        dwell_s=1.0,
        probes=False,
        stop_states=stop_states,
    )
