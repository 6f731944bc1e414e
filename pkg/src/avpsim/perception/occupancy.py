"""Spot occupancy from detections: a spot is occupied when some detection
covers more than `theta` of the spot's own area."""

from __future__ import annotations

from dataclasses import dataclass

from avpsim.world.geometry import OrientedRect, rect_intersection_area
from avpsim.world.lotmap import LotMap

OVERLAP_THETA_DEFAULT = 0.05


@dataclass(frozen=True)
class OccupancyFrame:
    """Partition of all spot IDs into occupied and available."""

    frame_seq: int
    timestamp_ns: int
    occupied: frozenset[int]
    available: frozenset[int]

    def __post_init__(self) -> None:
        if self.occupied & self.available:
            raise ValueError("occupied and available sets intersect")

    def to_payload(self) -> dict:
        return {
            "frame_seq": self.frame_seq,
            "occupied": sorted(self.occupied),
            "available": sorted(self.available),
        }

    @classmethod
    def from_payload(cls, obj: dict, timestamp_ns: int = 0) -> "OccupancyFrame":
        return cls(
            frame_seq=int(obj["frame_seq"]),
            timestamp_ns=timestamp_ns,
            occupied=frozenset(int(i) for i in obj["occupied"]),
            available=frozenset(int(i) for i in obj["available"]),
        )


def compute_occupancy(
    detections: list[OrientedRect],
    lot: LotMap,
    frame_seq: int,
    timestamp_ns: int,
    theta: float = OVERLAP_THETA_DEFAULT,
) -> OccupancyFrame:
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must be in [0, 1), got {theta}")
    occupied: set[int] = set()
    for spot in lot.spots:
        spot_area = spot.rect.area
        for det in detections:
            if rect_intersection_area(det, spot.rect) / spot_area > theta:
                occupied.add(spot.id)
                break
    available = lot.spot_ids - occupied
    return OccupancyFrame(frame_seq, timestamp_ns, frozenset(occupied), frozenset(available))
