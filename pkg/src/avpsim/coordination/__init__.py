"""Coordination managers: vehicle count, status, drop-off queue, and spot
reservation, folded over the inbound message stream by one event loop."""

from avpsim.coordination.managers import ManagerCore

__all__ = ["ManagerCore"]
