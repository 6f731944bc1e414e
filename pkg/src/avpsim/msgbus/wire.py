"""Wire protocol: length-prefixed JSON envelope frames over TCP.

A frame is a 4-byte big-endian unsigned length N followed by N bytes of
UTF-8 JSON encoding {"key", "sender_id", "seq", "timestamp_ns", "payload"}.
Control traffic uses the reserved key prefix `_ctl/` with the same frame
shape (hello, subscribe, remap, ok, error).
"""

from __future__ import annotations

import json
import socket
import struct
from dataclasses import dataclass
from typing import Any

MAX_FRAME_BYTES_DEFAULT = 1 << 20  # 1 MiB
CTL_PREFIX = "_ctl/"

_LEN = struct.Struct(">I")


class FrameError(Exception):
    """Frame violates the wire protocol (oversize, truncated, bad JSON)."""


@dataclass(frozen=True)
class Envelope:
    """One bus message."""

    key: str
    sender_id: str
    seq: int
    timestamp_ns: int
    payload: Any

    def to_wire(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "sender_id": self.sender_id,
            "seq": self.seq,
            "timestamp_ns": self.timestamp_ns,
            "payload": self.payload,
        }

    @classmethod
    def from_wire(cls, obj: dict[str, Any]) -> "Envelope":
        try:
            return cls(
                key=obj["key"],
                sender_id=obj["sender_id"],
                seq=obj["seq"],
                timestamp_ns=obj["timestamp_ns"],
                payload=obj["payload"],
            )
        except (KeyError, TypeError) as exc:
            raise FrameError(f"malformed envelope object: {exc}") from exc

    @property
    def is_control(self) -> bool:
        return self.key.startswith(CTL_PREFIX)


def encode_frame(env: Envelope, max_frame_bytes: int = MAX_FRAME_BYTES_DEFAULT) -> bytes:
    body = json.dumps(env.to_wire(), separators=(",", ":")).encode("utf-8")
    if len(body) > max_frame_bytes:
        raise FrameError(f"frame of {len(body)} bytes exceeds limit {max_frame_bytes}")
    return _LEN.pack(len(body)) + body


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf.extend(chunk)
    return bytes(buf)


def read_frame(
    sock: socket.socket, max_frame_bytes: int = MAX_FRAME_BYTES_DEFAULT
) -> Envelope | None:
    """Read one envelope; None on orderly EOF at a frame boundary."""
    header = _recv_exact(sock, _LEN.size)
    if header is None:
        return None
    (length,) = _LEN.unpack(header)
    if length > max_frame_bytes:
        raise FrameError(f"inbound frame of {length} bytes exceeds limit {max_frame_bytes}")
    body = _recv_exact(sock, length)
    if body is None:
        raise FrameError("connection closed mid-frame")
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"bad frame body: {exc}") from exc
    if not isinstance(obj, dict):
        raise FrameError("frame body is not a JSON object")
    return Envelope.from_wire(obj)
