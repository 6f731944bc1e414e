"""Namespaced key-based pub/sub transport with a central TCP router.

Keys are `/`-separated UTF-8 segments. Subscription patterns may use `*`
(exactly one segment) and `**` (zero or more segments, at most once per
pattern). Payloads are arbitrary JSON values carried in Envelope frames.
"""

from avpsim.msgbus.keyexpr import (
    KeyExprError,
    RemapRule,
    key_matches,
    validate_key,
    validate_pattern,
)
from avpsim.msgbus.wire import Envelope, FrameError, MAX_FRAME_BYTES_DEFAULT
from avpsim.msgbus.router import Router
from avpsim.msgbus.session import Session, SessionError, connect
from avpsim.msgbus.rtt import RttStats, ProbeError, rtt_probe, echo_responder

__all__ = [
    "Envelope",
    "FrameError",
    "KeyExprError",
    "MAX_FRAME_BYTES_DEFAULT",
    "ProbeError",
    "RemapRule",
    "Router",
    "RttStats",
    "Session",
    "SessionError",
    "connect",
    "echo_responder",
    "key_matches",
    "rtt_probe",
    "validate_key",
    "validate_pattern",
]
