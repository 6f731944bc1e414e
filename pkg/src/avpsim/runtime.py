"""Shared service plumbing: readiness announcements, SIGTERM hookup, and
fixed-rate pacing. Every long-running component subscribes first, then
announces readiness, so the launcher can order startup without retained
messages."""

from __future__ import annotations

import signal
import threading
import time

from avpsim.msgbus.session import Session

READY_PREFIX = "avp/_ready/"


def publish_ready(session: Session, name: str) -> None:
    session.publish(READY_PREFIX + name, {"component": name})


def install_stop_signals(stop: threading.Event) -> None:
    """SIGTERM/SIGINT set the stop event (main thread only)."""

    def handler(signum, frame):  # noqa: ARG001
        stop.set()

    signal.signal(signal.SIGTERM, handler)
    signal.signal(signal.SIGINT, handler)


class PaceTimer:
    """Fixed-period scheduler on the monotonic clock.

    Late wakeups are repaid by firing subsequent ticks early (no sleep), so
    the average rate holds under scheduler jitter; only a stall deeper than
    `max_backlog` periods is forgiven by rebasing.
    """

    def __init__(self, period_s: float, max_backlog: int = 20) -> None:
        self.period_s = period_s
        self.max_backlog = max_backlog
        self._next = time.monotonic() + period_s

    def wait(self, stop: threading.Event | None = None) -> None:
        """Sleep until the next tick boundary (interruptible by `stop`)."""
        remaining = self._next - time.monotonic()
        if remaining > 0:
            if stop is not None:
                stop.wait(remaining)
            else:
                time.sleep(remaining)
        self._next += self.period_s
        if self._next < time.monotonic() - self.max_backlog * self.period_s:
            self._next = time.monotonic() + self.period_s
