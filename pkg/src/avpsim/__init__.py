"""Distributed multi-vehicle autonomous valet parking simulator.

Subpackages:
    msgbus       -- namespaced key-based pub/sub transport (router, sessions, RTT probes)
    world        -- 2D parking lot, waypoint routing, kinematic stepping, collisions
    perception   -- roadside-unit occupancy pipeline (detector model + overlap checks)
    coordination -- vehicle count / status / queue / reservation managers
    vehicle      -- per-vehicle lifecycle state machine and controller process
    harness      -- scenario runner, bus tap, assertion checks, reports, panel gateway
"""

__version__ = "0.1.0"
