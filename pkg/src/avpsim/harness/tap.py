"""Bus tap: records every envelope (with receive timestamps) to NDJSON and
keeps a live index the runner polls for readiness, states, and stop
conditions."""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import IO

from avpsim.msgbus.session import Session
from avpsim.msgbus.wire import Envelope
from avpsim.runtime import READY_PREFIX


class TapRecorder:
    """Subscribes `**`, appends one JSON object per envelope to `out_path`."""

    def __init__(self, session: Session, out_path: str | Path) -> None:
        self.session = session
        self.out_path = Path(out_path)
        self._fh: IO[str] | None = None
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._flusher: threading.Thread | None = None
        self._flushed = 0
        self._stop = threading.Event()
        self.entries: list[dict] = []
        self.ready: set[str] = set()
        self.states: dict[str, str] = {}
        self.states_seen: dict[str, set[str]] = {}
        self.collisions = 0
        self.sim_tick = 0

    def start(self) -> None:
        stream = self.session.subscribe("**")
        self._fh = open(self.out_path, "w", encoding="utf-8")

        def _loop() -> None:
            while not self._stop.is_set():
                try:
                    env = stream.get(timeout=0.2)
                except TimeoutError:
                    continue
                self._record(env)

        def _flush_loop() -> None:
            # serialization happens off the hot receive path, in batches
            while not self._stop.wait(0.1):
                self._flush_batch()

        self._thread = threading.Thread(target=_loop, name="tap", daemon=True)
        self._thread.start()
        self._flusher = threading.Thread(target=_flush_loop, name="tap-flush", daemon=True)
        self._flusher.start()

    def _flush_batch(self) -> None:
        with self._lock:
            batch = self.entries[self._flushed :]
            self._flushed += len(batch)
            fh = self._fh
        if batch and fh is not None:
            fh.write("".join(json.dumps(e, separators=(",", ":")) + "\n" for e in batch))

    def _record(self, env: Envelope) -> None:
        entry = env.to_wire()
        entry["recv_ns"] = time.time_ns()
        with self._lock:
            self.entries.append(entry)
            key = env.key
            if key.startswith(READY_PREFIX):
                self.ready.add(key[len(READY_PREFIX) :])
            elif key == "avp/sim/clock":
                self.sim_tick = max(self.sim_tick, int((env.payload or {}).get("tick", 0)))
            elif key == "avp/sim/collision":
                self.collisions += 1
            else:
                parts = key.split("/")
                if len(parts) == 3 and parts[0] == "avp" and parts[2] == "status":
                    state = (env.payload or {}).get("state")
                    if isinstance(state, str):
                        self.states[parts[1]] = state
                        self.states_seen.setdefault(parts[1], set()).add(state)

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
        if self._flusher is not None:
            self._flusher.join(timeout=5.0)
        self._flush_batch()  # anything recorded after the flusher's last pass
        with self._lock:
            if self._fh is not None:
                self._fh.flush()
                self._fh.close()
                self._fh = None

    def snapshot_entries(self) -> list[dict]:
        with self._lock:
            return list(self.entries)

    def is_ready(self, name: str) -> bool:
        with self._lock:
            return name in self.ready

    def state_of(self, ns: str) -> str | None:
        with self._lock:
            return self.states.get(ns)

    def has_seen_state(self, ns: str, state: str) -> bool:
        with self._lock:
            return state in self.states_seen.get(ns, ())

    def sim_time_s(self, tick_s: float) -> float:
        """Simulated seconds elapsed, from the world's clock announcements."""
        with self._lock:
            return self.sim_tick * tick_s


def read_tap(path: str | Path) -> list[dict]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries
