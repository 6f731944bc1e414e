"""Operator-panel gateway: bridges the bus to a websocket endpoint.

On connect, every envelope matching the panel patterns streams to the
client as one JSON text frame per message. Inbound frames must be
{"kind": "DROPOFF"|"PARK"|"RETRIEVE", "target_ns": ...}; valid commands are
published on `avp/<target_ns>/cmd`, malformed ones get an error frame back
and nothing is published.

Plain HTTP GETs on the same port serve the lot map (`/map.json`) and,
when configured, the panel's static files.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from http import HTTPStatus
from pathlib import Path

from websockets.http11 import Request, Response
from websockets.sync.server import Server, ServerConnection, serve

from avpsim.msgbus.session import Session
from avpsim.runtime import publish_ready
from avpsim.vehicle.fsm import COMMAND_KINDS

log = logging.getLogger(__name__)

PANEL_PATTERNS = [
    "avp/coord/**",
    "avp/sim/poses",
    "avp/rsu/occupancy",
    "avp/*/status",
]

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
}


class _Broadcast:
    """Fan-out of bus envelopes to every connected websocket."""

    def __init__(self) -> None:
        self._clients: set[queue.Queue] = set()
        self._lock = threading.Lock()

    def register(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=4096)
        with self._lock:
            self._clients.add(q)
        return q

    def unregister(self, q: queue.Queue) -> None:
        with self._lock:
            self._clients.discard(q)

    def push(self, text: str) -> None:
        with self._lock:
            clients = list(self._clients)
        for q in clients:
            try:
                q.put_nowait(text)
            except queue.Full:
                pass  # slow panel: drop rather than stall the bus pump


def run_gateway(
    session: Session,
    listen: str,
    stop: threading.Event | None = None,
    map_path: Path | None = None,
    static_dir: Path | None = None,
    on_bound=None,
) -> None:
    stop = stop or threading.Event()
    broadcast = _Broadcast()
    stream = session.subscribe_many(PANEL_PATTERNS)

    def pump() -> None:
        while not stop.is_set():
            try:
                env = stream.get(timeout=0.2)
            except TimeoutError:
                continue
            broadcast.push(json.dumps(env.to_wire(), separators=(",", ":")))

    map_text = map_path.read_text(encoding="utf-8") if map_path else None

    def process_request(conn: ServerConnection, request: Request) -> Response | None:
        if request.headers.get("Upgrade", "").lower() == "websocket":
            return None
        if request.path == "/map.json" and map_text is not None:
            return conn.respond(HTTPStatus.OK, map_text)
        if static_dir is not None:
            rel = request.path.lstrip("/") or "index.html"
            candidate = (static_dir / rel).resolve()
            if candidate.is_file() and static_dir.resolve() in candidate.parents:
                response = conn.respond(HTTPStatus.OK, candidate.read_bytes().decode("utf-8"))
                ctype = _CONTENT_TYPES.get(candidate.suffix)
                if ctype:
                    response.headers["Content-Type"] = ctype
                return response
        return conn.respond(HTTPStatus.NOT_FOUND, "not found\n")

    def handler(conn: ServerConnection) -> None:
        outbox = broadcast.register()
        closed = threading.Event()

        def writer() -> None:
            while not (stop.is_set() or closed.is_set()):
                try:
                    text = outbox.get(timeout=0.2)
                except queue.Empty:
                    continue
                try:
                    conn.send(text)
                except Exception:
                    return

        wt = threading.Thread(target=writer, daemon=True)
        wt.start()
        try:
            for message in conn:
                reply = _handle_command(session, message)
                if reply is not None:
                    conn.send(json.dumps(reply, separators=(",", ":")))
        except Exception:
            pass
        finally:
            closed.set()
            broadcast.unregister(outbox)
            wt.join(timeout=1.0)

    host, _, port = listen.rpartition(":")
    server: Server = serve(
        handler, host or "127.0.0.1", int(port), process_request=process_request
    )
    bound = server.socket.getsockname()
    address = f"{bound[0]}:{bound[1]}"
    if on_bound is not None:
        on_bound(address)
    log.info("gateway listening on ws://%s", address)

    pump_thread = threading.Thread(target=pump, name="gateway-pump", daemon=True)
    pump_thread.start()
    server_thread = threading.Thread(target=server.serve_forever, daemon=True)
    server_thread.start()
    publish_ready(session, "gateway")
    try:
        stop.wait()
    finally:
        server.shutdown()
        pump_thread.join(timeout=1.0)
        server_thread.join(timeout=2.0)


def _handle_command(session: Session, message) -> dict | None:
    """Publish a valid inbound command; error frame (and no publish) otherwise."""
    try:
        obj = json.loads(message)
    except (TypeError, json.JSONDecodeError):
        return {"error": "not-json"}
    if not isinstance(obj, dict):
        return {"error": "not-an-object"}
    kind = obj.get("kind")
    target = obj.get("target_ns")
    if kind not in COMMAND_KINDS:
        return {"error": f"unknown-kind:{kind}"}
    if not isinstance(target, str) or not target or "/" in target:
        return {"error": "bad-target-ns"}
    session.publish(f"avp/{target}/cmd", {"kind": kind})
    return {"ok": True, "kind": kind, "target_ns": target}
