"""Planar poses and oriented rectangles.

Intersection tests use the separating axis theorem over the four candidate
edge normals; overlap area comes from Sutherland-Hodgman clipping followed
by the shoelace formula. `intersects` means strict interior overlap, so
rectangles that merely touch report (False, 0.0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class Pose2:
    x: float
    y: float
    yaw: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def to_payload(self) -> dict:
        return {"x": self.x, "y": self.y, "yaw": self.yaw}

    @classmethod
    def from_payload(cls, obj: dict) -> "Pose2":
        return cls(float(obj["x"]), float(obj["y"]), float(obj["yaw"]))


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle given by center, half-extents, and rotation."""

    cx: float
    cy: float
    hx: float
    hy: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        if self.hx <= 0 or self.hy <= 0:
            raise ValueError(f"half-extents must be positive, got ({self.hx}, {self.hy})")

    @property
    def area(self) -> float:
        return 4.0 * self.hx * self.hy

    def corners(self) -> np.ndarray:
        """Corner coordinates, counterclockwise, shape (4, 2)."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        local = np.array(
            [[self.hx, self.hy], [-self.hx, self.hy], [-self.hx, -self.hy], [self.hx, -self.hy]]
        )
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.cx, self.cy])

    def axes(self) -> np.ndarray:
        """The two unit edge normals, shape (2, 2)."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, s], [-s, c]])

    @classmethod
    def from_pose(cls, pose: Pose2, length: float, width: float) -> "OrientedRect":
        """Footprint rectangle for a body at `pose` (length along heading)."""
        return cls(pose.x, pose.y, length / 2.0, width / 2.0, pose.yaw)

    def to_payload(self) -> dict:
        return {"cx": self.cx, "cy": self.cy, "hx": self.hx, "hy": self.hy, "yaw": self.yaw}

    @classmethod
    def from_payload(cls, obj: dict) -> "OrientedRect":
        return cls(
            float(obj["cx"]),
            float(obj["cy"]),
            float(obj["hx"]),
            float(obj["hy"]),
            float(obj.get("yaw", 0.0)),
        )


def _circles_disjoint(a: OrientedRect, b: OrientedRect) -> bool:
    dx = a.cx - b.cx
    dy = a.cy - b.cy
    ra = math.hypot(a.hx, a.hy)
    rb = math.hypot(b.hx, b.hy)
    return dx * dx + dy * dy >= (ra + rb) * (ra + rb)


def rects_intersect(a: OrientedRect, b: OrientedRect) -> bool:
    """Strict-overlap SAT test over the four candidate axes."""
    if _circles_disjoint(a, b):  # cheap reject for the common far-apart case
        return False
    ca, cb = a.corners(), b.corners()
    for axis in np.vstack([a.axes(), b.axes()]):
        pa = ca @ axis
        pb = cb @ axis
        if pa.max() <= pb.min() or pb.max() <= pa.min():
            return False
    return True


def _clip_polygon(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman: clip `subject` by convex CCW `clipper`."""
    output = subject
    n = len(clipper)
    for i in range(n):
        if len(output) == 0:
            break
        a = clipper[i]
        b = clipper[(i + 1) % n]
        edge = b - a
        inputs = output
        out: list[np.ndarray] = []
        # signed area sign tells which side of the edge each vertex is on
        rel = inputs - a
        side = edge[0] * rel[:, 1] - edge[1] * rel[:, 0]
        for j in range(len(inputs)):
            k = (j + 1) % len(inputs)
            p, q = inputs[j], inputs[k]
            p_in, q_in = side[j] >= 0, side[k] >= 0
            if p_in:
                out.append(p)
            if p_in != q_in:
                denom = side[j] - side[k]
                t = side[j] / denom
                out.append(p + t * (q - p))
        output = np.array(out) if out else np.empty((0, 2))
    return output


def _shoelace(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def rect_intersection_area(a: OrientedRect, b: OrientedRect) -> float:
    if _circles_disjoint(a, b):
        return 0.0
    return _shoelace(_clip_polygon(a.corners(), b.corners()))


def oriented_rect_overlap(a: OrientedRect, b: OrientedRect) -> tuple[bool, float]:
    """(intersects, overlap area). Non-intersecting pairs report area 0."""
    if not rects_intersect(a, b):
        return False, 0.0
    return True, rect_intersection_area(a, b)
