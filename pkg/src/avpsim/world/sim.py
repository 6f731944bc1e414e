"""Fixed-timestep kinematic world.

Each vehicle with an active path advances toward its current target at
min(max_speed, remaining/dt); yaw follows the direction of travel and snaps
to the target yaw when the path is exhausted. After motion, every footprint
pair is tested for overlap and collisions are reported (never resolved).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from avpsim.world.geometry import OrientedRect, Pose2, normalize_angle, rects_intersect
from avpsim.world.lotmap import LotMap
from avpsim.world.routing import ARRIVAL_TOLERANCE_M

DEFAULT_TICK_S = 0.05
MAX_TICK_S = 0.1

DEFAULT_LENGTH_M = 4.6
DEFAULT_WIDTH_M = 1.9
DEFAULT_MAX_SPEED_MPS = 3.5


@dataclass(frozen=True)
class GoalReached:
    ns: str


@dataclass(frozen=True)
class Collision:
    ns_a: str
    ns_b: str


Event = GoalReached | Collision


@dataclass
class VehicleBody:
    ns: str
    pose: Pose2
    length: float = DEFAULT_LENGTH_M
    width: float = DEFAULT_WIDTH_M
    max_speed: float = DEFAULT_MAX_SPEED_MPS
    cls: str = "sedan"
    active_path: list[Pose2] | None = None
    path_index: int = 0
    speed: float = field(default=0.0, init=False)

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"vehicle {self.ns}: footprint dimensions must be positive")
        if self.max_speed <= 0:
            raise ValueError(f"vehicle {self.ns}: max_speed must be positive")

    @property
    def footprint(self) -> OrientedRect:
        return OrientedRect.from_pose(self.pose, self.length, self.width)

    def to_pose_payload(self) -> dict:
        return {
            "ns": self.ns,
            "x": self.pose.x,
            "y": self.pose.y,
            "yaw": self.pose.yaw,
            "len": self.length,
            "wid": self.width,
            "cls": self.cls,
        }


class World:
    """All vehicle bodies plus the static lot; advanced by `step`."""

    def __init__(self, lot: LotMap) -> None:
        self.lot = lot
        self.vehicles: dict[str, VehicleBody] = {}
        self.tick_count = 0

    def spawn(self, vehicle: VehicleBody) -> None:
        if vehicle.ns in self.vehicles:
            raise ValueError(f"vehicle {vehicle.ns!r} already spawned")
        self.vehicles[vehicle.ns] = vehicle

    def despawn(self, ns: str) -> None:
        self.vehicles.pop(ns, None)

    def set_path(self, ns: str, path: list[Pose2]) -> None:
        body = self.vehicles.get(ns)
        if body is None or not path:
            return
        body.active_path = path
        body.path_index = 0

    def step(self, dt_s: float = DEFAULT_TICK_S) -> list[Event]:
        if not 0 < dt_s <= MAX_TICK_S:
            raise ValueError(f"dt must be in (0, {MAX_TICK_S}], got {dt_s}")
        events: list[Event] = []
        for body in self.vehicles.values():
            if body.active_path is None:
                body.speed = 0.0
                continue
            self._advance(body, dt_s)
            if body.active_path is not None and body.path_index >= len(body.active_path):
                final = body.active_path[-1]
                body.pose = Pose2(body.pose.x, body.pose.y, final.yaw)
                body.active_path = None
                body.path_index = 0
                body.speed = 0.0
                events.append(GoalReached(body.ns))
        order = list(self.vehicles.values())
        for i, a in enumerate(order):
            for b in order[i + 1 :]:
                if rects_intersect(a.footprint, b.footprint):
                    events.append(Collision(a.ns, b.ns))
        self.tick_count += 1
        return events

    def _advance(self, body: VehicleBody, dt_s: float) -> None:
        assert body.active_path is not None
        target = body.active_path[body.path_index]
        dx = target.x - body.pose.x
        dy = target.y - body.pose.y
        dist = math.hypot(dx, dy)
        if dist > ARRIVAL_TOLERANCE_M:
            speed = min(body.max_speed, dist / dt_s)
            step_len = speed * dt_s
            yaw = normalize_angle(math.atan2(dy, dx))
            frac = min(1.0, step_len / dist)
            body.pose = Pose2(body.pose.x + dx * frac, body.pose.y + dy * frac, yaw)
            body.speed = speed
            dist = math.hypot(target.x - body.pose.x, target.y - body.pose.y)
        if dist <= ARRIVAL_TOLERANCE_M:
            body.path_index += 1
