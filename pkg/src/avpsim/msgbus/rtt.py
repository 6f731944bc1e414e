"""Round-trip-time probes over the bus.

A responder for peer P echoes every payload published on
`avp/probe/ping/<P>` back on `avp/probe/pong/<requester>`. The prober
timestamps each ping, matches pongs by index, and reports mean/std/max over
the pongs actually received; losses shrink the sample count, they never
abort the probe.
"""

from __future__ import annotations

import itertools
import statistics
import threading
import time
from dataclasses import dataclass

from avpsim.msgbus.session import Session

PING_KEY = "avp/probe/ping/{peer}"
PONG_KEY = "avp/probe/pong/{requester}"


class ProbeError(Exception):
    """No pongs received at all."""


@dataclass(frozen=True)
class RttStats:
    """RTT summary: mean ± std with max, over `samples` received pongs."""

    mean_ms: float
    std_ms: float
    max_ms: float
    samples: int

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("RttStats requires at least one sample")
        if self.std_ms < 0 or self.max_ms < self.mean_ms - 1e-9:
            raise ValueError("inconsistent RTT statistics")

    def to_payload(self) -> dict:
        return {
            "mean_ms": self.mean_ms,
            "std_ms": self.std_ms,
            "max_ms": self.max_ms,
            "samples": self.samples,
        }

    @classmethod
    def from_rtts_ms(cls, rtts_ms: list[float]) -> "RttStats":
        if not rtts_ms:
            raise ProbeError("no samples")
        return cls(
            mean_ms=statistics.fmean(rtts_ms),
            std_ms=statistics.pstdev(rtts_ms),
            max_ms=max(rtts_ms),
            samples=len(rtts_ms),
        )


def echo_responder(
    session: Session, peer_id: str, stop: threading.Event | None = None
) -> threading.Thread:
    """Start an echo responder thread for `peer_id`. Returns the thread."""
    stream = session.subscribe(PING_KEY.format(peer=peer_id))

    def _loop() -> None:
        while stop is None or not stop.is_set():
            try:
                env = stream.get(timeout=0.2)
            except TimeoutError:
                continue
            payload = env.payload if isinstance(env.payload, dict) else {}
            requester = payload.get("requester")
            if not requester:
                continue
            try:
                session.publish(PONG_KEY.format(requester=requester), payload)
            except Exception:
                return

    thread = threading.Thread(target=_loop, name=f"echo-{peer_id}", daemon=True)
    thread.start()
    return thread


class Prober:
    """Reusable prober bound to one session's pong stream."""

    def __init__(self, session: Session) -> None:
        self.session = session
        self._stream = session.subscribe(PONG_KEY.format(requester=session.client_id))
        self._indices = itertools.count()

    def collect(
        self, peer_id: str, count: int, interval_ms: float, timeout_s: float = 2.0
    ) -> list[float]:
        """Send `count` pings spaced `interval_ms` apart; RTTs of the pongs
        that came back (losses shrink the result, they never raise)."""
        if count < 1:
            raise ValueError("count must be positive")
        rtts_ms: dict[int, float] = {}
        pending = {next(self._indices) for _ in range(count)}

        def _drain(block_s: float | None) -> None:
            while True:
                try:
                    env = self._stream.get(timeout=block_s if block_s is not None else 0.0)
                except TimeoutError:
                    return
                payload = env.payload if isinstance(env.payload, dict) else {}
                i = payload.get("i")
                t_send = payload.get("t_send_ns")
                if isinstance(i, int) and isinstance(t_send, int) and i in pending:
                    rtts_ms[i] = (time.monotonic_ns() - t_send) / 1e6
                block_s = 0.0

        ping_key = PING_KEY.format(peer=peer_id)
        interval_s = interval_ms / 1000.0
        next_send = time.monotonic()
        for i in sorted(pending):
            self.session.publish(
                ping_key,
                {"requester": self.session.client_id, "i": i, "t_send_ns": time.monotonic_ns()},
            )
            next_send += interval_s
            while True:
                remaining = next_send - time.monotonic()
                if remaining <= 0:
                    _drain(None)
                    break
                _drain(remaining)
                if next_send - time.monotonic() <= 0:
                    break

        deadline = time.monotonic() + timeout_s
        while len(rtts_ms) < count and time.monotonic() < deadline:
            _drain(min(0.05, max(0.0, deadline - time.monotonic())))
        return list(rtts_ms.values())

    def probe(
        self, peer_id: str, count: int, interval_ms: float, timeout_s: float = 2.0
    ) -> RttStats:
        rtts = self.collect(peer_id, count, interval_ms, timeout_s)
        if not rtts:
            raise ProbeError(f"no pongs from {peer_id!r} after {count} pings")
        return RttStats.from_rtts_ms(rtts)


def rtt_probe(
    session: Session,
    peer_id: str,
    count: int,
    interval_ms: float,
    timeout_s: float = 2.0,
) -> RttStats:
    """One-shot probe: subscribe, ping `count` times, summarize."""
    return Prober(session).probe(peer_id, count, interval_ms, timeout_s)
