"""Central pub/sub router: fans every published envelope out to each
matching subscription, applying per-connection remap rules first.

One reader thread per connection keeps per-connection ingress order; fan-out
happens under a single routing lock, so every subscriber observes a
per-(sender, key) FIFO. Cross-sender ordering is unspecified.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import queue
import socket
import threading
import time
from typing import Any

from avpsim.msgbus.keyexpr import (
    KeyExprError,
    RemapRule,
    match_segments,
    validate_key,
    validate_pattern,
)
from avpsim.msgbus.wire import (
    CTL_PREFIX,
    Envelope,
    FrameError,
    MAX_FRAME_BYTES_DEFAULT,
    encode_frame,
    read_frame,
)

log = logging.getLogger(__name__)

ROUTER_ID = "_router"


class _Connection:
    def __init__(self, sock: socket.socket, peer: str) -> None:
        self.sock = sock
        self.peer = peer
        self.client_id: str | None = None
        self.subscriptions: list[list[str]] = []  # pre-split patterns
        self.remaps: list[RemapRule] = []
        self.outbox: queue.Queue[bytes | None] = queue.Queue()
        self.alive = True
        self.ctl_seq = 0

    def next_ctl_seq(self) -> int:
        self.ctl_seq += 1
        return self.ctl_seq


class Router:
    """TCP pub/sub router. `start()` binds and serves until `stop()`."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        max_frame_bytes: int = MAX_FRAME_BYTES_DEFAULT,
    ) -> None:
        self._host = host
        self._port = port
        self._max_frame_bytes = max_frame_bytes
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._lock = threading.Lock()
        self._connections: list[_Connection] = []
        self._roster: dict[str, _Connection] = {}
        self._stopping = threading.Event()

    @property
    def address(self) -> str:
        assert self._listener is not None, "router not started"
        host, port = self._listener.getsockname()[:2]
        return f"{host}:{port}"

    def start(self) -> str:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self._host, self._port))
        listener.listen(64)
        listener.settimeout(0.2)  # lets the accept loop notice stop()
        self._listener = listener
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="router-accept", daemon=True
        )
        self._accept_thread.start()
        return self.address

    def stop(self) -> None:
        self._stopping.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            conns = list(self._connections)
        for conn in conns:
            self._drop(conn)
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)

    def serve_forever(self) -> None:
        """Block until stop() or KeyboardInterrupt."""
        try:
            while not self._stopping.wait(0.2):
                pass
        except KeyboardInterrupt:
            self.stop()

    # -- per-connection machinery ------------------------------------------

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            sock.settimeout(None)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Connection(sock, f"{addr[0]}:{addr[1]}")
            with self._lock:
                self._connections.append(conn)
            threading.Thread(
                target=self._read_loop, args=(conn,), name=f"router-rx-{conn.peer}", daemon=True
            ).start()
            threading.Thread(
                target=self._write_loop, args=(conn,), name=f"router-tx-{conn.peer}", daemon=True
            ).start()

    def _write_loop(self, conn: _Connection) -> None:
        # the writer owns the socket close: queued frames (e.g. a rejection
        # reason) drain before the connection goes away
        try:
            while True:
                frame = conn.outbox.get()
                if frame is None:
                    return
                try:
                    conn.sock.sendall(frame)
                except OSError:
                    self._drop(conn)
                    return
        finally:
            try:
                conn.sock.close()
            except OSError:
                pass

    def _read_loop(self, conn: _Connection) -> None:
        try:
            while True:
                env = read_frame(conn.sock, self._max_frame_bytes)
                if env is None:
                    break
                if env.is_control:
                    self._handle_control(conn, env)
                elif conn.client_id is None:
                    self._send_error(conn, None, "hello-required")
                    break
                else:
                    self._route(conn, env)
        except (FrameError, OSError) as exc:
            if not self._stopping.is_set():
                log.warning("dropping %s: %s", conn.client_id or conn.peer, exc)
        finally:
            self._drop(conn)

    # -- control plane ------------------------------------------------------

    def _handle_control(self, conn: _Connection, env: Envelope) -> None:
        op = env.key[len(CTL_PREFIX) :]
        payload = env.payload if isinstance(env.payload, dict) else {}
        if op == "hello":
            client_id = payload.get("client_id")
            if not client_id or not isinstance(client_id, str):
                self._send_error(conn, env.seq, "bad-client-id")
                raise FrameError("hello without client_id")
            with self._lock:
                if client_id in self._roster:
                    dup = True
                else:
                    dup = False
                    self._roster[client_id] = conn
                    conn.client_id = client_id
            if dup:
                self._send_error(conn, env.seq, "duplicate-client-id")
                raise FrameError(f"duplicate client_id {client_id!r}")
            self._send_ok(conn, env.seq)
            return
        if conn.client_id is None:
            self._send_error(conn, env.seq, "hello-required")
            raise FrameError("control frame before hello")
        if op == "subscribe":
            try:
                segments = validate_pattern(payload["pattern"])
            except (KeyError, TypeError, KeyExprError) as exc:
                self._send_error(conn, env.seq, f"bad-pattern: {exc}")
                return
            with self._lock:
                conn.subscriptions.append(segments)
            self._send_ok(conn, env.seq)
        elif op == "remap":
            try:
                rule = RemapRule(payload["external"], payload["internal"])
            except (KeyError, KeyExprError) as exc:
                self._send_error(conn, env.seq, f"bad-remap: {exc}")
                return
            with self._lock:
                conn.remaps.append(rule)
            self._send_ok(conn, env.seq)
        else:
            self._send_error(conn, env.seq, f"unknown-control: {op}")

    def _send_ok(self, conn: _Connection, re_seq: int | None) -> None:
        self._send_ctl(conn, "ok", {"re": re_seq})

    def _send_error(self, conn: _Connection, re_seq: int | None, reason: str) -> None:
        self._send_ctl(conn, "error", {"re": re_seq, "reason": reason})

    def _send_ctl(self, conn: _Connection, op: str, payload: dict[str, Any]) -> None:
        env = Envelope(
            key=CTL_PREFIX + op,
            sender_id=ROUTER_ID,
            seq=conn.next_ctl_seq(),
            timestamp_ns=time.time_ns(),
            payload=payload,
        )
        conn.outbox.put(encode_frame(env, self._max_frame_bytes))

    # -- data plane ----------------------------------------------------------

    def _route(self, src: _Connection, env: Envelope) -> None:
        try:
            key_segments = validate_key(env.key)
        except KeyExprError as exc:
            self._send_error(src, env.seq, f"bad-key: {exc}")
            return
        plain_frame: bytes | None = None  # shared by every un-remapped delivery
        with self._lock:
            for conn in self._connections:
                if not conn.alive or conn.client_id is None:
                    continue
                key = env.key
                segments = key_segments
                for rule in conn.remaps:
                    rewritten = rule.apply(key)
                    if rewritten is not None:
                        key = rewritten
                        segments = key.split("/")
                        break
                n_hits = sum(1 for pat in conn.subscriptions if match_segments(pat, segments))
                if n_hits == 0:
                    continue
                if key == env.key:
                    if plain_frame is None:
                        plain_frame = encode_frame(env, self._max_frame_bytes)
                    frame = plain_frame
                else:
                    out = dataclasses.replace(env, key=key)
                    frame = encode_frame(out, self._max_frame_bytes)
                for _ in range(n_hits):
                    conn.outbox.put(frame)

    def _drop(self, conn: _Connection) -> None:
        with self._lock:
            if not conn.alive:
                return
            conn.alive = False
            if conn in self._connections:
                self._connections.remove(conn)
            if conn.client_id and self._roster.get(conn.client_id) is conn:
                del self._roster[conn.client_id]
        conn.outbox.put(None)  # writer drains, then closes the socket


def parse_address(addr: str) -> tuple[str, int]:
    """Parse 'host:port' (':port' means all interfaces)."""
    host, _, port = addr.rpartition(":")
    return host or "0.0.0.0", int(port)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="router", description="pub/sub router")
    parser.add_argument("--listen", required=True, help="host:port to listen on")
    parser.add_argument("--max-frame-bytes", type=int, default=MAX_FRAME_BYTES_DEFAULT)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    host, port = parse_address(args.listen)
    router = Router(host, port, args.max_frame_bytes)
    address = router.start()
    print(f"router listening on {address}", flush=True)
    router.serve_forever()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
