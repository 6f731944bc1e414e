"""Client session: publish, wildcard subscriptions, and remap registration.

A session is safe for one publisher context and one subscriber-consumer
context at a time; publishes are serialized internally by a send lock. Each
`subscribe` call yields its own stream (several may share one queue, which
merges them in arrival order).
"""

from __future__ import annotations

import queue
import socket
import threading
import time
from typing import Any, Iterator

from avpsim.msgbus.keyexpr import RemapRule, match_segments, validate_key, validate_pattern
from avpsim.msgbus.wire import (
    CTL_PREFIX,
    Envelope,
    FrameError,
    MAX_FRAME_BYTES_DEFAULT,
    encode_frame,
    read_frame,
)

CONTROL_TIMEOUT_S = 5.0


class SessionError(Exception):
    """Connection, handshake, or control-plane failure."""


class SubscriptionStream:
    """Iterator over envelopes delivered for one subscription."""

    def __init__(self, pattern: str, q: "queue.Queue[Envelope]") -> None:
        self.pattern = pattern
        self._queue = q

    def get(self, timeout: float | None = None) -> Envelope:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError(f"no message on {self.pattern!r} within {timeout}s") from None

    def get_nowait(self) -> Envelope | None:
        try:
            return self._queue.get_nowait()
        except queue.Empty:
            return None

    def __iter__(self) -> Iterator[Envelope]:
        while True:
            yield self._queue.get()


class Session:
    """One client connection to the router."""

    def __init__(self, sock: socket.socket, client_id: str, max_frame_bytes: int) -> None:
        self.client_id = client_id
        self._sock = sock
        self._max_frame_bytes = max_frame_bytes
        self._send_lock = threading.Lock()
        self._ctl_lock = threading.Lock()
        self._seq: dict[str, int] = {}
        self._ctl_replies: queue.Queue[Envelope] = queue.Queue()
        self._subs: list[tuple[list[str], queue.Queue[Envelope]]] = []  # pre-split patterns
        self._subs_lock = threading.Lock()
        self._closed = threading.Event()
        # consecutive-copy dispatch for overlapping subscriptions
        self._last_identity: tuple[str, str, int] | None = None
        self._dup_index = 0
        self._rx_thread = threading.Thread(
            target=self._recv_loop, name=f"session-rx-{client_id}", daemon=True
        )

    # -- lifecycle -----------------------------------------------------------

    def _handshake(self) -> None:
        self._send_control("hello", {"client_id": self.client_id}, await_reply=False)
        reply = read_frame(self._sock, self._max_frame_bytes)
        if reply is None:
            raise SessionError("router closed connection during handshake")
        if reply.key == CTL_PREFIX + "error":
            raise SessionError(f"router rejected session: {reply.payload.get('reason')}")
        if reply.key != CTL_PREFIX + "ok":
            raise SessionError(f"unexpected handshake reply on {reply.key!r}")
        self._rx_thread.start()

    def close(self) -> None:
        if self._closed.is_set():
            return
        self._closed.set()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass

    @property
    def closed(self) -> bool:
        return self._closed.is_set()

    def __enter__(self) -> "Session":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    # -- publishing ----------------------------------------------------------

    def publish(self, key: str, payload: Any) -> None:
        """Publish one envelope; seq is monotonic per (client, key)."""
        validate_key(key)
        if self._closed.is_set():
            raise SessionError("session closed")
        with self._send_lock:
            seq = self._seq.get(key, 0) + 1
            env = Envelope(
                key=key,
                sender_id=self.client_id,
                seq=seq,
                timestamp_ns=time.time_ns(),
                payload=payload,
            )
            frame = encode_frame(env, self._max_frame_bytes)  # oversize: raises, nothing sent
            self._seq[key] = seq
            try:
                self._sock.sendall(frame)
            except OSError as exc:
                self.close()
                raise SessionError(f"publish failed: {exc}") from exc

    # -- subscriptions ---------------------------------------------------------

    def subscribe(
        self, pattern: str, q: "queue.Queue[Envelope] | None" = None
    ) -> SubscriptionStream:
        """Register a pattern; returns a stream of matching envelopes.

        Delivery starts with messages the router processes after this call
        returns; earlier traffic is not replayed.
        """
        segments = validate_pattern(pattern)
        target = q if q is not None else queue.Queue()
        with self._subs_lock:
            self._subs.append((segments, target))
        try:
            self._send_control("subscribe", {"pattern": pattern})
        except SessionError:
            with self._subs_lock:
                self._subs.remove((segments, target))
            raise
        return SubscriptionStream(pattern, target)

    def subscribe_many(self, patterns: list[str]) -> SubscriptionStream:
        """Subscribe several patterns merged into one arrival-ordered stream."""
        shared: queue.Queue[Envelope] = queue.Queue()
        stream = None
        for pattern in patterns:
            stream = self.subscribe(pattern, shared)
        assert stream is not None, "subscribe_many requires at least one pattern"
        return SubscriptionStream("|".join(patterns), shared)

    def remap(self, external: str, internal: str) -> None:
        """Register a remap rule: matching inbound keys are rewritten before
        this session's subscriptions are matched."""
        RemapRule(external, internal)  # client-side validation
        self._send_control("remap", {"external": external, "internal": internal})

    # -- internals -------------------------------------------------------------

    def _send_control(self, op: str, payload: dict[str, Any], await_reply: bool = True) -> None:
        with self._ctl_lock:
            while not self._ctl_replies.empty():  # stale async errors (e.g. bad data key)
                self._ctl_replies.get_nowait()
            with self._send_lock:
                key = CTL_PREFIX + op
                seq = self._seq.get(key, 0) + 1
                self._seq[key] = seq
                env = Envelope(key, self.client_id, seq, time.time_ns(), payload)
                try:
                    self._sock.sendall(encode_frame(env, self._max_frame_bytes))
                except OSError as exc:
                    self.close()
                    raise SessionError(f"control send failed: {exc}") from exc
            if not await_reply:
                return
            try:
                reply = self._ctl_replies.get(timeout=CONTROL_TIMEOUT_S)
            except queue.Empty:
                raise SessionError(f"no router reply to {op} within {CONTROL_TIMEOUT_S}s") from None
        if reply.key == CTL_PREFIX + "error":
            raise SessionError(f"{op} rejected: {reply.payload.get('reason')}")

    def _recv_loop(self) -> None:
        try:
            while True:
                env = read_frame(self._sock, self._max_frame_bytes)
                if env is None:
                    break
                if env.is_control:
                    self._ctl_replies.put(env)
                else:
                    self._dispatch(env)
        except (FrameError, OSError):
            pass
        finally:
            self._closed.set()

    def _dispatch(self, env: Envelope) -> None:
        # The router sends one copy per matching subscription, consecutively.
        # Recompute the match list locally (same order) and hand the n-th
        # consecutive copy to the n-th matching subscription.
        segments = env.key.split("/")
        with self._subs_lock:
            targets = [q for (pat, q) in self._subs if match_segments(pat, segments)]
        if not targets:
            return
        identity = (env.sender_id, env.key, env.seq)
        if identity == self._last_identity:
            self._dup_index += 1
        else:
            self._last_identity = identity
            self._dup_index = 0
        targets[self._dup_index % len(targets)].put(env)


def connect(
    router_address: str,
    client_id: str,
    max_frame_bytes: int = MAX_FRAME_BYTES_DEFAULT,
    timeout_s: float | None = None,
) -> Session:
    """Open a session to the router at 'host:port'."""
    host, _, port = router_address.rpartition(":")
    sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=timeout_s)
    sock.settimeout(None)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    session = Session(sock, client_id, max_frame_bytes)
    try:
        session._handshake()
    except Exception:
        sock.close()
        raise
    return session


def connect_retry(
    router_address: str, client_id: str, deadline_s: float = 10.0
) -> Session:
    """Connect, retrying while the router comes up."""
    deadline = time.monotonic() + deadline_s
    last: Exception | None = None
    while time.monotonic() < deadline:
        try:
            return connect(router_address, client_id, timeout_s=2.0)
        except (OSError, SessionError) as exc:
            last = exc
            time.sleep(0.1)
    raise SessionError(f"cannot reach router at {router_address}: {last}")
